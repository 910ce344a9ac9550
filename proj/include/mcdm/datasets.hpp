#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mcdm/csv.hpp"
#include "mcdm/error.hpp"
#include "mcdm/fce.hpp"
#include "mcdm/hierarchy.hpp"
#include "mcdm/model_io.hpp"
#include "mcdm/rng.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

enum class Domain { Supplier, CustomerSatisfaction, AirQuality };

inline std::string_view to_string(Domain d) {
    switch (d) {
        case Domain::Supplier: return "supplier";
        case Domain::CustomerSatisfaction: return "customer-satisfaction";
        case Domain::AirQuality: return "air-quality";
    }
    return "?";
}

inline Domain domain_from_string(std::string_view s) {
    const auto k = text::normalize(s);
    if (k == "supplier") return Domain::Supplier;
    if (k == "customer-satisfaction" || k == "customer_satisfaction") return Domain::CustomerSatisfaction;
    if (k == "air-quality" || k == "air_quality") return Domain::AirQuality;
    throw Error(ErrorKind::Config, "unknown domain \"" + std::string(s) + "\"");
}

enum class ColumnKind { Categorical, Numeric };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;
    /// Decision-model dimension this column feeds; empty for passthrough columns.
    std::string dimension;
};

/// Grades a numeric label column, for sources that publish a score instead
/// of a grade.
struct LabelBin {
    std::string label;
    Interval range;
};

struct RecordSchema {
    Domain domain = Domain::Supplier;
    std::vector<ColumnSpec> columns;
    std::optional<std::string> label_column;
    std::vector<LabelBin> label_bins;

    const ColumnSpec* column_for(std::string_view dimension) const {
        for (const auto& c : columns) {
            if (text::iequals(c.dimension, dimension)) return &c;
        }
        return nullptr;
    }
};

inline RecordSchema schema_from_json(const json& j) {
    try {
        RecordSchema s;
        s.domain = domain_from_string(j.at("domain").get<std::string>());
        for (const auto& jc : j.at("columns")) {
            ColumnSpec c;
            c.name = jc.at("name").get<std::string>();
            const auto kind = text::normalize(jc.value("kind", std::string("categorical")));
            if (kind == "numeric") {
                c.kind = ColumnKind::Numeric;
            } else if (kind != "categorical") {
                throw Error(ErrorKind::Config, "column \"" + c.name + "\" has unknown kind \"" + kind + "\"");
            }
            c.dimension = jc.value("dimension", std::string{});
            s.columns.push_back(std::move(c));
        }
        if (j.contains("label_column") && !j.at("label_column").is_null()) {
            s.label_column = j.at("label_column").get<std::string>();
            bool found = false;
            for (const auto& c : s.columns) found = found || c.name == *s.label_column;
            if (!found) {
                throw Error(ErrorKind::Config, "label column \"" + *s.label_column + "\" is not a schema column");
            }
        }
        for (const auto& jb : j.value("label_bins", json::array())) {
            s.label_bins.push_back({jb.at("label").get<std::string>(),
                                    {detail::bound_from_json(jb.at("range")[0], -INFINITY),
                                     detail::bound_from_json(jb.at("range")[1], INFINITY)}});
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed record schema: ") + e.what());
    }
}

inline RecordSchema load_schema(const std::filesystem::path& path) { return schema_from_json(read_json_file(path)); }

using FieldValue = std::variant<std::string, double>;

struct RawRecord {
    std::map<std::string, FieldValue> values;
    std::size_t row_index = 0;

    const FieldValue& at(const std::string& column) const {
        const auto it = values.find(column);
        if (it == values.end()) throw MissingColumnError(column);
        return it->second;
    }
};

inline std::string field_text(const FieldValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return csv::format_double(std::get<double>(v));
}

/// One selected level (criterion) per dimension, in model dimension order.
struct MappedRecord {
    std::string source;
    std::size_t row_index = 0;
    std::vector<std::pair<std::string, std::string>> levels;

    const std::string& level(std::string_view dimension) const {
        for (const auto& [d, l] : levels) {
            if (text::iequals(d, dimension)) return l;
        }
        throw Error(ErrorKind::InvalidArgument, "record has no level for \"" + std::string(dimension) + "\"");
    }

    bool same_identity(const MappedRecord& other) const {
        return source == other.source && row_index == other.row_index;
    }
};

struct LabeledExample {
    RawRecord raw;
    MappedRecord mapped;
    std::string grade;
};

/// Reads a header-row CSV, keeping schema columns only. Numeric columns are
/// parsed as reals; row indices count data rows from zero.
inline std::vector<RawRecord> ingest_csv(std::istream& in, const RecordSchema& schema) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || (header->size() == 1 && text::trim((*header)[0]).empty())) {
        throw Error(ErrorKind::EmptyFile, "input has no header row");
    }
    std::vector<std::size_t> positions;
    for (const auto& col : schema.columns) {
        std::optional<std::size_t> pos;
        for (std::size_t i = 0; i < header->size(); ++i) {
            if (text::trim((*header)[i]) == col.name) pos = i;
        }
        if (!pos) throw MissingColumnError(col.name);
        positions.push_back(*pos);
    }

    std::vector<RawRecord> records;
    while (auto row = reader.next()) {
        if (row->size() == 1 && text::trim((*row)[0]).empty()) continue;  // blank line
        RawRecord rec;
        rec.row_index = records.size();
        for (std::size_t k = 0; k < schema.columns.size(); ++k) {
            const auto& col = schema.columns[k];
            if (positions[k] >= row->size()) {
                throw ParseError(rec.row_index, col.name, "row has only " + std::to_string(row->size()) + " fields");
            }
            const auto& cell = (*row)[positions[k]];
            if (col.kind == ColumnKind::Numeric) {
                const auto v = csv::parse_double(cell);
                if (!v) throw ParseError(rec.row_index, col.name, "\"" + cell + "\" is not a number");
                rec.values.emplace(col.name, *v);
            } else {
                rec.values.emplace(col.name, std::string(text::trim(cell)));
            }
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(ErrorKind::EmptyFile, "input has a header but no data rows");
    return records;
}

inline std::vector<RawRecord> ingest_csv(const std::filesystem::path& path, const RecordSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return ingest_csv(in, schema);
}

/// Level of one dimension for a raw value: categorical values match the
/// criterion name or its listed spellings case-insensitively, numeric values
/// fall into [lo, hi) bins.
inline std::size_t match_level(const Dimension& dim, const FieldValue& value) {
    if (const auto* num = std::get_if<double>(&value)) {
        for (std::size_t c = 0; c < dim.criteria.size(); ++c) {
            if (const auto* nb = std::get_if<NumericBins>(&dim.criteria[c].levels)) {
                for (const auto& b : nb->bins) {
                    if (b.contains(*num)) return c;
                }
            }
        }
        throw Error(ErrorKind::UnmappableLevel,
                    dim.name + ": value " + csv::format_double(*num) + " falls in no level bin");
    }
    const auto& s = std::get<std::string>(value);
    for (std::size_t c = 0; c < dim.criteria.size(); ++c) {
        const auto& crit = dim.criteria[c];
        if (const auto* cat = std::get_if<CategoricalLevels>(&crit.levels)) {
            if (text::iequals(crit.name, s)) return c;
            for (const auto& l : cat->labels) {
                if (text::iequals(l, s)) return c;
            }
        }
    }
    throw Error(ErrorKind::UnmappableLevel, dim.name + ": \"" + s + "\" matches no level");
}

inline MappedRecord map_record(const RawRecord& record, const DecisionModel& model, const RecordSchema& schema,
                               std::string source = {}) {
    MappedRecord out;
    out.source = std::move(source);
    out.row_index = record.row_index;
    for (const auto& dim : model.dimensions) {
        const auto* col = schema.column_for(dim.name);
        if (!col) throw MissingColumnError(dim.name);
        const auto c = match_level(dim, record.at(col->name));
        out.levels.emplace_back(dim.name, dim.criteria[c].name);
    }
    return out;
}

inline MappedRecord map_supplier(const RawRecord& record, const DecisionModel& model, const RecordSchema& schema,
                                 std::string source = {}) {
    return map_record(record, model, schema, std::move(source));
}

/// Grade index a criterion anchors to: its rank k among L levels (best
/// first) maps to round(k (G-1) / (L-1)), halves rounding up.
inline std::size_t anchored_grade(const Dimension& dim, std::size_t criterion, std::size_t grade_count) {
    const auto order = dim.rank_order();
    const std::size_t levels = order.size();
    if (levels <= 1) return 0;
    std::size_t k = 0;
    while (order[k] != criterion) ++k;
    const std::size_t num = 2 * k * (grade_count - 1) + (levels - 1);
    return num / (2 * (levels - 1));
}

/// Level-anchored membership rows: every criterion of a dimension carries the
/// one-hot row of the level the record selected in that dimension.
inline FactorRatings level_ratings(const DecisionModel& model, const MappedRecord& mapped) {
    FactorRatings ratings;
    const auto g = model.grades.size();
    for (const auto& dim : model.dimensions) {
        const auto c = dim.find_criterion(mapped.level(dim.name));
        if (!c) {
            throw Error(ErrorKind::UnmappableLevel,
                        dim.name + ": \"" + mapped.level(dim.name) + "\" is not a level of this model");
        }
        const auto row = one_hot(g, anchored_grade(dim, *c, g));
        for (const auto& crit : dim.criteria) ratings[{dim.name, crit.name}] = row;
    }
    return ratings;
}

/// AHP-FCE grade of a mapped record.
inline std::string fce_grade(const DecisionModel& model, const MappedRecord& mapped,
                             SynthesisOperator op = SynthesisOperator::WeightedAverage) {
    return evaluate_hierarchical(model, level_ratings(model, mapped), op).grade;
}

struct DomainConfig {
    DecisionModel model;
    RecordSchema schema;
};

inline std::string normalize_label(std::string_view raw, const GradeSet& grades) {
    if (auto i = grades.find(raw)) return grades.label(*i);
    throw Error(ErrorKind::UnknownLabel, "\"" + std::string(raw) + "\" is not a grade in {" +
                                             text::join(grades.labels(), ", ") + "}");
}

/// Expert grade for a record: computed by AHP-FCE for suppliers, read from
/// the label column for the other domains.
inline std::string ground_truth(const RawRecord& record, const DomainConfig& cfg) {
    if (cfg.schema.domain == Domain::Supplier) {
        return fce_grade(cfg.model, map_supplier(record, cfg.model, cfg.schema));
    }
    if (!cfg.schema.label_column) {
        throw Error(ErrorKind::Config, std::string(to_string(cfg.schema.domain)) + " schema has no label column");
    }
    const auto& v = record.at(*cfg.schema.label_column);
    if (const auto* num = std::get_if<double>(&v)) {
        for (const auto& bin : cfg.schema.label_bins) {
            if (bin.range.contains(*num)) return normalize_label(bin.label, cfg.model.grades);
        }
        throw Error(ErrorKind::UnknownLabel, "label score " + csv::format_double(*num) + " falls in no label bin");
    }
    return normalize_label(std::get<std::string>(v), cfg.model.grades);
}

inline std::vector<LabeledExample> label_records(const std::vector<RawRecord>& records, const DomainConfig& cfg,
                                                 const std::string& source) {
    std::vector<LabeledExample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back({r, map_record(r, cfg.model, cfg.schema, source), ground_truth(r, cfg)});
    }
    return out;
}

/// Fixture level frequencies over rank positions (best first): weight
/// 1 + min(k, L-1-k), i.e. 1:2:2:1 for four levels and 1:2:3:2:1 for five.
inline std::vector<double> fixture_level_weights(std::size_t levels) {
    std::vector<double> w(levels);
    for (std::size_t k = 0; k < levels; ++k) w[k] = 1.0 + static_cast<double>(std::min(k, levels - 1 - k));
    return w;
}

namespace detail {

inline constexpr double kFixtureTicks = 1e4;

/// Finite sampling support for a numeric dimension: open-ended bins are
/// clipped to the width of the nearest finite bin (or 1 if there is none).
inline std::vector<Interval> fixture_support(const Dimension& dim) {
    std::vector<Interval> bins;
    for (const auto& c : dim.criteria) {
        if (const auto* nb = std::get_if<NumericBins>(&c.levels)) bins.insert(bins.end(), nb->bins.begin(), nb->bins.end());
    }
    std::sort(bins.begin(), bins.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    const auto is_finite = [](const Interval& b) { return std::isfinite(b.lo) && std::isfinite(b.hi); };
    const auto first = std::find_if(bins.begin(), bins.end(), is_finite);
    const auto last = std::find_if(bins.rbegin(), bins.rend(), is_finite);
    const double low_width = first == bins.end() ? 1.0 : first->hi - first->lo;
    const double high_width = last == bins.rend() ? 1.0 : last->hi - last->lo;
    for (auto& b : bins) {
        if (std::isinf(b.lo) && std::isinf(b.hi)) {
            b = {0.0, 1.0};
        } else if (std::isinf(b.lo)) {
            b.lo = b.hi - low_width;
        } else if (std::isinf(b.hi)) {
            b.hi = b.lo + high_width;
        }
    }
    return bins;
}

/// Draws uniformly over the union of bins on a 1e-4 grid, so the value
/// survives a text round trip without leaving its bin.
inline double draw_numeric(Rng& rng, const std::vector<Interval>& support) {
    double total = 0.0;
    std::vector<double> widths;
    for (const auto& b : support) {
        widths.push_back(b.hi - b.lo);
        total += widths.back();
    }
    const auto i = rng.categorical(widths);
    const auto& b = support[i];
    const auto ticks = static_cast<std::uint64_t>(std::floor((b.hi - b.lo) * kFixtureTicks));
    const auto lo_ticks = static_cast<long long>(std::llround(b.lo * kFixtureTicks));
    const auto k = static_cast<long long>(rng.below(ticks));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(lo_ticks + k) / kFixtureTicks);
    return *csv::parse_double(buf);
}

}  // namespace detail

/// Deterministic synthetic records following the domain schema. Categorical
/// levels use fixture_level_weights over rank order; numeric values are
/// uniform over the union of level bins. Labels come from ground_truth.
inline std::vector<LabeledExample> synthesize_fixtures(const DomainConfig& cfg, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "fixture count must be >= 1");
    Rng rng(seed);
    const auto& model = cfg.model;
    const std::string source = "fixture:" + std::string(to_string(cfg.schema.domain)) + ":" + std::to_string(seed);

    std::vector<LabeledExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RawRecord raw;
        raw.row_index = i;
        for (const auto& col : cfg.schema.columns) {
            if (col.dimension.empty()) continue;
            const auto& dim = model.dimension(col.dimension);
            if (col.kind == ColumnKind::Numeric) {
                raw.values[col.name] = detail::draw_numeric(rng, detail::fixture_support(dim));
            } else {
                const auto order = dim.rank_order();
                const auto w = fixture_level_weights(order.size());
                raw.values[col.name] = dim.criteria[order[rng.categorical(w)]].name;
            }
        }
        // Remaining non-label columns get an empty placeholder so the record
        // conforms to its schema.
        for (const auto& col : cfg.schema.columns) {
            if (!raw.values.contains(col.name) && (!cfg.schema.label_column || col.name != *cfg.schema.label_column)) {
                raw.values[col.name] = col.kind == ColumnKind::Numeric ? FieldValue(0.0) : FieldValue(std::string{});
            }
        }
        auto mapped = map_record(raw, model, cfg.schema, source);
        if (cfg.schema.label_column) {
            const auto grade = fce_grade(model, mapped);
            const auto* col = [&]() -> const ColumnSpec* {
                for (const auto& c : cfg.schema.columns) {
                    if (c.name == *cfg.schema.label_column) return &c;
                }
                return nullptr;
            }();
            if (col->kind == ColumnKind::Numeric) {
                // Score columns get the midpoint of the grade's label bin.
                double v = 0.0;
                for (const auto& b : cfg.schema.label_bins) {
                    if (text::iequals(b.label, grade)) {
                        v = std::isfinite(b.range.lo) && std::isfinite(b.range.hi) ? (b.range.lo + b.range.hi) / 2
                            : std::isfinite(b.range.lo)                             ? b.range.lo
                                                                                    : b.range.hi - 1;
                    }
                }
                raw.values[col->name] = v;
            } else {
                raw.values[col->name] = grade;
            }
        }
        auto grade = ground_truth(raw, cfg);
        out.push_back({std::move(raw), std::move(mapped), std::move(grade)});
    }
    return out;
}

/// Fixture CSV: schema columns in order, then a "grade" column.
inline void write_examples_csv(std::ostream& out, const std::vector<LabeledExample>& examples,
                               const RecordSchema& schema) {
    csv::Row header;
    for (const auto& c : schema.columns) header.push_back(c.name);
    header.push_back("grade");
    csv::write_row(out, header);
    for (const auto& ex : examples) {
        csv::Row row;
        for (const auto& c : schema.columns) row.push_back(field_text(ex.raw.at(c.name)));
        row.push_back(ex.grade);
        csv::write_row(out, row);
    }
}

struct Split {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
};

/// Seeded shuffle, first train_count examples go to train.
inline Split split_count(const std::vector<LabeledExample>& examples, std::size_t train_count, std::uint64_t seed) {
    if (train_count > examples.size()) {
        throw Error(ErrorKind::InvalidArgument, "train count exceeds example count");
    }
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    Split s;
    for (std::size_t i = 0; i < idx.size(); ++i) (i < train_count ? s.train : s.test).push_back(examples[idx[i]]);
    return s;
}

inline Split split(const std::vector<LabeledExample>& examples, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
    }
    const auto count = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(examples.size())));
    return split_count(examples, count, seed);
}

}  // namespace mcdm
