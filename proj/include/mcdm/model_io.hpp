#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mcdm/error.hpp"
#include "mcdm/hierarchy.hpp"

// DecisionModel <-> JSON. Weights may be given directly ("weight") or derived
// from a judgment matrix: a top-level "judgment_matrix" yields dimension
// weights, a per-dimension "judgment_matrix" yields that dimension's
// criterion weights.

namespace mcdm {

using json = nlohmann::json;

namespace detail {

inline double bound_from_json(const json& j, double infinite) {
    if (j.is_null()) return infinite;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        throw Error(ErrorKind::Config, "bad bin bound \"" + s + "\"");
    }
    return j.get<double>();
}

inline json bound_to_json(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

inline LevelSpec levels_from_json(const json& j) {
    if (j.is_null()) return CategoricalLevels{};
    if (j.contains("bins")) {
        NumericBins nb;
        for (const auto& b : j.at("bins")) {
            if (!b.is_array() || b.size() != 2) {
                throw Error(ErrorKind::Config, "each bin must be a [lo, hi] pair");
            }
            nb.bins.push_back({bound_from_json(b[0], -std::numeric_limits<double>::infinity()),
                               bound_from_json(b[1], std::numeric_limits<double>::infinity())});
        }
        return nb;
    }
    CategoricalLevels cat;
    if (j.contains("labels")) cat.labels = j.at("labels").get<std::vector<std::string>>();
    return cat;
}

inline json levels_to_json(const LevelSpec& spec) {
    if (const auto* nb = std::get_if<NumericBins>(&spec)) {
        json bins = json::array();
        for (const auto& b : nb->bins) bins.push_back({bound_to_json(b.lo), bound_to_json(b.hi)});
        return {{"bins", bins}};
    }
    const auto& cat = std::get<CategoricalLevels>(spec);
    if (cat.labels.empty()) return json::object();
    return {{"labels", cat.labels}};
}

inline PrincipalEigen weights_from_matrix(const json& j, std::size_t expected, const std::string& where) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.size() != expected) {
        throw Error(ErrorKind::Config, where + ": judgment matrix order " + std::to_string(rows.size()) +
                                           " does not match " + std::to_string(expected) + " entries");
    }
    return principal_weights(SaatyMatrix::from_rows(rows));
}

}  // namespace detail

inline GradeSet grades_from_json(const json& j) {
    if (j.is_array()) return GradeSet(j.get<std::vector<std::string>>());
    auto labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("values")) return GradeSet(std::move(labels), j.at("values").get<std::vector<double>>());
    return GradeSet(std::move(labels));
}

inline json grades_to_json(const GradeSet& g) {
    return {{"labels", g.labels()}, {"values", g.values()}};
}

inline DecisionModel model_from_json(const json& j) {
    try {
        DecisionModel m;
        m.name = j.at("name").get<std::string>();
        m.task = j.value("task", std::string{});
        m.grades = grades_from_json(j.at("grades"));
        m.weight_tolerance = j.value("weight_tolerance", kWeightSumTolerance);

        for (const auto& jd : j.at("dimensions")) {
            Dimension d;
            d.name = jd.at("name").get<std::string>();
            d.weight = jd.value("weight", 0.0);
            for (const auto& jc : jd.at("criteria")) {
                Criterion c;
                c.name = jc.at("name").get<std::string>();
                c.weight = jc.value("weight", 0.0);
                c.levels = detail::levels_from_json(jc.value("levels", json()));
                d.criteria.push_back(std::move(c));
            }
            if (jd.contains("judgment_matrix")) {
                const auto eig = detail::weights_from_matrix(jd.at("judgment_matrix"), d.criteria.size(),
                                                             "dimension \"" + d.name + "\"");
                for (std::size_t i = 0; i < d.criteria.size(); ++i) d.criteria[i].weight = eig.weights[i];
                if (d.criteria.size() <= kRandomIndex.size()) {
                    d.consistency_ratio = consistency_ratio(
                        SaatyMatrix::from_rows(jd.at("judgment_matrix").get<std::vector<std::vector<double>>>()),
                        eig.lambda_max);
                }
            }
            m.dimensions.push_back(std::move(d));
        }
        if (j.contains("judgment_matrix")) {
            const auto rows = j.at("judgment_matrix").get<std::vector<std::vector<double>>>();
            const auto eig = detail::weights_from_matrix(j.at("judgment_matrix"), m.dimensions.size(), "model");
            for (std::size_t i = 0; i < m.dimensions.size(); ++i) m.dimensions[i].weight = eig.weights[i];
            if (m.dimensions.size() <= kRandomIndex.size()) {
                m.consistency_ratio = consistency_ratio(SaatyMatrix::from_rows(rows), eig.lambda_max);
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed decision model: ") + e.what());
    }
}

/// Serializes with direct weights (derived weights are materialized).
inline json model_to_json(const DecisionModel& m) {
    json dims = json::array();
    for (const auto& d : m.dimensions) {
        json crits = json::array();
        for (const auto& c : d.criteria) {
            crits.push_back({{"name", c.name}, {"weight", c.weight}, {"levels", detail::levels_to_json(c.levels)}});
        }
        dims.push_back({{"name", d.name}, {"weight", d.weight}, {"criteria", crits}});
    }
    json out = {{"name", m.name}, {"grades", grades_to_json(m.grades)}, {"dimensions", dims}};
    if (!m.task.empty()) out["task"] = m.task;
    if (m.weight_tolerance != kWeightSumTolerance) out["weight_tolerance"] = m.weight_tolerance;
    return out;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

inline DecisionModel load_model(const std::filesystem::path& path) {
    return model_from_json(read_json_file(path));
}

}  // namespace mcdm
