#pragma once

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcdm/csv.hpp"
#include "mcdm/error.hpp"
#include "mcdm/repository.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

/// Rows are truth, columns prediction. Unparsed predictions are counted
/// apart from the grid.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<long>> counts;
    long unparsed = 0;

    explicit ConfusionMatrix(std::vector<std::string> l = {})
        : labels(std::move(l)), counts(labels.size(), std::vector<long>(labels.size(), 0)) {}

    std::size_t size() const noexcept { return labels.size(); }

    long total() const {
        long t = 0;
        for (const auto& row : counts) {
            for (long c : row) t += c;
        }
        return t;
    }
    long row_sum(std::size_t i) const {
        long t = 0;
        for (long c : counts[i]) t += c;
        return t;
    }
    long col_sum(std::size_t j) const {
        long t = 0;
        for (const auto& row : counts) t += row[j];
        return t;
    }
    long trace() const {
        long t = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
        return t;
    }

    std::optional<std::size_t> index_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) return i;
        }
        return std::nullopt;
    }

    void add(std::string_view truth, std::string_view predicted) {
        const auto t = index_of(truth);
        if (!t) throw Error(ErrorKind::UnknownTruthLabel, "truth label \"" + std::string(truth) + "\" not in label set");
        if (const auto p = index_of(predicted)) {
            ++counts[*t][*p];
        } else {
            ++unparsed;
        }
    }
};

inline ConfusionMatrix confusion(const std::vector<RepositoryRecord>& records, const std::vector<std::string>& labels) {
    ConfusionMatrix cm(labels);
    for (const auto& r : records) cm.add(r.ground_truth, r.verdict.grade);
    return cm;
}

struct ClassMetrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long support = 0;
    /// Set when a denominator was zero and the metric defaulted to 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline double harmonic_mean(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline std::vector<ClassMetrics> per_class_prf(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> out;
    for (std::size_t k = 0; k < cm.size(); ++k) {
        ClassMetrics m;
        m.label = cm.labels[k];
        const long tp = cm.counts[k][k];
        const long predicted = cm.col_sum(k);
        m.support = cm.row_sum(k);
        if (predicted > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        } else {
            m.precision_undefined = true;
        }
        if (m.support > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
        } else {
            m.recall_undefined = true;
        }
        m.f1 = harmonic_mean(m.precision, m.recall);
        out.push_back(std::move(m));
    }
    return out;
}

/// Unweighted mean over classes.
inline Prf macro_prf(const std::vector<ClassMetrics>& per_class) {
    if (per_class.empty()) throw Error(ErrorKind::InvalidArgument, "macro average of no classes");
    Prf out;
    for (const auto& m : per_class) {
        out.precision += m.precision;
        out.recall += m.recall;
        out.f1 += m.f1;
    }
    const auto n = static_cast<double>(per_class.size());
    return {out.precision / n, out.recall / n, out.f1 / n};
}

/// Support-weighted mean over classes.
inline Prf weighted_prf(const std::vector<ClassMetrics>& per_class) {
    Prf out;
    long total = 0;
    for (const auto& m : per_class) {
        out.precision += m.precision * static_cast<double>(m.support);
        out.recall += m.recall * static_cast<double>(m.support);
        out.f1 += m.f1 * static_cast<double>(m.support);
        total += m.support;
    }
    if (total == 0) return {};
    const auto n = static_cast<double>(total);
    return {out.precision / n, out.recall / n, out.f1 / n};
}

struct RunMeta {
    std::string backend_id;
    std::string template_id;
    std::string domain;
};

struct EvalReport {
    RunMeta meta;
    ConfusionMatrix confusion;
    std::vector<ClassMetrics> per_class;
    Prf macro;
    Prf weighted;
    double accuracy = 0.0;
    std::vector<std::string> warnings;
};

inline EvalReport make_report(ConfusionMatrix cm, RunMeta meta) {
    EvalReport r;
    r.meta = std::move(meta);
    r.per_class = per_class_prf(cm);
    r.macro = macro_prf(r.per_class);
    r.weighted = weighted_prf(r.per_class);
    const long total = cm.total();
    r.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
    for (const auto& m : r.per_class) {
        if (m.precision_undefined) r.warnings.push_back("class \"" + m.label + "\" was never predicted; precision set to 0");
        if (m.recall_undefined) r.warnings.push_back("class \"" + m.label + "\" has no support; recall set to 0");
    }
    if (cm.unparsed > 0) {
        r.warnings.push_back(std::to_string(cm.unparsed) + " unparsed verdict(s) excluded from the matrix");
    }
    r.confusion = std::move(cm);
    return r;
}

struct DeltaRow {
    std::string scope;  // "class", "macro", "weighted", "accuracy"
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DeltaTable {
    RunMeta a;
    RunMeta b;
    std::vector<DeltaRow> rows;

    const DeltaRow& find(std::string_view scope, std::string_view label = {}) const {
        for (const auto& r : rows) {
            if (r.scope == scope && r.label == label) return r;
        }
        throw Error(ErrorKind::InvalidArgument, "no delta row " + std::string(scope) + "/" + std::string(label));
    }
};

/// Signed deltas b - a, per class then macro, weighted and accuracy.
inline DeltaTable compare_runs(const EvalReport& a, const EvalReport& b) {
    if (a.meta.domain != b.meta.domain || a.confusion.labels != b.confusion.labels) {
        throw Error(ErrorKind::LabelSetMismatch, "cannot compare " + a.meta.domain + " {" +
                                                     text::join(a.confusion.labels, ", ") + "} with " + b.meta.domain +
                                                     " {" + text::join(b.confusion.labels, ", ") + "}");
    }
    DeltaTable t{a.meta, b.meta, {}};
    for (std::size_t k = 0; k < a.per_class.size(); ++k) {
        const auto& x = a.per_class[k];
        const auto& y = b.per_class[k];
        t.rows.push_back({"class", x.label, y.precision - x.precision, y.recall - x.recall, y.f1 - x.f1});
    }
    t.rows.push_back({"macro", "", b.macro.precision - a.macro.precision, b.macro.recall - a.macro.recall,
                      b.macro.f1 - a.macro.f1});
    t.rows.push_back({"weighted", "", b.weighted.precision - a.weighted.precision,
                      b.weighted.recall - a.weighted.recall, b.weighted.f1 - a.weighted.f1});
    const double dacc = b.accuracy - a.accuracy;
    t.rows.push_back({"accuracy", "", dacc, dacc, dacc});
    return t;
}

/// One report per (backend, template) pair, in first-seen order. A
/// repository must hold a single domain and label set.
inline std::vector<EvalReport> reports_from_records(const std::vector<RepositoryRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no records");
    const auto& first = records.front();
    for (const auto& r : records) {
        if (r.domain != first.domain || r.grade_labels != first.grade_labels) {
            throw Error(ErrorKind::LabelSetMismatch, "repository mixes domain " + first.domain + " with " + r.domain);
        }
    }
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<RepositoryRecord>> groups;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.backend_id, r.template_id);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(r);
    }
    std::vector<EvalReport> out;
    for (const auto& key : order) {
        out.push_back(make_report(confusion(groups[key], first.grade_labels), {key.first, key.second, first.domain}));
    }
    return out;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json to_json(const RunMeta& m) {
    return {{"backend_id", m.backend_id}, {"template_id", m.template_id}, {"domain", m.domain}};
}

inline nlohmann::json to_json(const Prf& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& m : r.per_class) {
        classes.push_back({{"label", m.label},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"precision_undefined", m.precision_undefined},
                           {"recall_undefined", m.recall_undefined}});
    }
    return {
        {"meta", to_json(r.meta)},
        {"labels", r.confusion.labels},
        {"confusion", r.confusion.counts},
        {"unparsed", r.confusion.unparsed},
        {"samples", r.confusion.total()},
        {"per_class", classes},
        {"macro", to_json(r.macro)},
        {"weighted", to_json(r.weighted)},
        {"accuracy", r.accuracy},
        {"warnings", r.warnings},
    };
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.meta = {j.at("meta").at("backend_id").get<std::string>(), j.at("meta").at("template_id").get<std::string>(),
              j.at("meta").at("domain").get<std::string>()};
    r.confusion = ConfusionMatrix(j.at("labels").get<std::vector<std::string>>());
    r.confusion.counts = j.at("confusion").get<std::vector<std::vector<long>>>();
    r.confusion.unparsed = j.at("unparsed").get<long>();
    for (const auto& c : j.at("per_class")) {
        r.per_class.push_back({c.at("label").get<std::string>(), c.at("precision").get<double>(),
                               c.at("recall").get<double>(), c.at("f1").get<double>(), c.at("support").get<long>(),
                               c.value("precision_undefined", false), c.value("recall_undefined", false)});
    }
    const auto prf = [](const nlohmann::json& p) {
        return Prf{p.at("precision").get<double>(), p.at("recall").get<double>(), p.at("f1").get<double>()};
    };
    r.macro = prf(j.at("macro"));
    r.weighted = prf(j.at("weighted"));
    r.accuracy = j.at("accuracy").get<double>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
}

namespace detail {
inline std::string fixed(double v, int digits = 6) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}
}  // namespace detail

/// Flat CSV: one row per class plus macro and weighted rows.
inline void write_report_csv(std::ostream& out, const EvalReport& r) {
    csv::write_row(out, {"domain", "backend_id", "template_id", "scope", "label", "precision", "recall", "f1", "support"});
    const auto base = [&](std::string scope, std::string label, double p, double rc, double f, long s) {
        csv::write_row(out, {r.meta.domain, r.meta.backend_id, r.meta.template_id, std::move(scope), std::move(label),
                             detail::fixed(p), detail::fixed(rc), detail::fixed(f), std::to_string(s)});
    };
    for (const auto& m : r.per_class) base("class", m.label, m.precision, m.recall, m.f1, m.support);
    const long n = r.confusion.total();
    base("macro", "", r.macro.precision, r.macro.recall, r.macro.f1, n);
    base("weighted", "", r.weighted.precision, r.weighted.recall, r.weighted.f1, n);
}

/// Aligned plain-text confusion grid (rows truth, columns prediction).
inline std::string render_grid(const ConfusionMatrix& cm) {
    std::size_t w = std::string("truth \\ pred").size();
    for (const auto& l : cm.labels) w = std::max(w, l.size());
    std::size_t cw = 0;
    for (const auto& l : cm.labels) cw = std::max(cw, l.size());
    for (const auto& row : cm.counts) {
        for (long c : row) cw = std::max(cw, std::to_string(c).size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(w)) << "truth \\ pred";
    for (const auto& l : cm.labels) os << "  " << std::right << std::setw(static_cast<int>(cw)) << l;
    os << '\n';
    for (std::size_t i = 0; i < cm.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(w)) << cm.labels[i];
        for (long c : cm.counts[i]) os << "  " << std::right << std::setw(static_cast<int>(cw)) << c;
        os << '\n';
    }
    if (cm.unparsed) os << "unparsed: " << cm.unparsed << '\n';
    return os.str();
}

inline nlohmann::json to_json(const DeltaTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"scope", r.scope}, {"label", r.label}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    }
    return {{"a", to_json(t.a)}, {"b", to_json(t.b)}, {"deltas", rows}};
}

inline void write_delta_csv(std::ostream& out, const DeltaTable& t) {
    csv::write_row(out, {"scope", "label", "delta_precision", "delta_recall", "delta_f1"});
    for (const auto& r : t.rows) {
        csv::write_row(out, {r.scope, r.label, detail::fixed(r.precision), detail::fixed(r.recall), detail::fixed(r.f1)});
    }
}

}  // namespace mcdm
