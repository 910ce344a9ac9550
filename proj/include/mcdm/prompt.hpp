#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mcdm/datasets.hpp"
#include "mcdm/error.hpp"
#include "mcdm/hierarchy.hpp"
#include "mcdm/rng.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

enum class PromptMode { ZeroShot, FewShot, CoT, FewShotCoT };

inline std::string_view to_string(PromptMode m) {
    switch (m) {
        case PromptMode::ZeroShot: return "zero-shot";
        case PromptMode::FewShot: return "few-shot";
        case PromptMode::CoT: return "cot";
        case PromptMode::FewShotCoT: return "few-shot-cot";
    }
    return "?";
}

inline bool uses_exemplars(PromptMode m) { return m == PromptMode::FewShot || m == PromptMode::FewShotCoT; }
inline bool uses_reasoning(PromptMode m) { return m == PromptMode::CoT || m == PromptMode::FewShotCoT; }

/// Literal prefix of the answer line; prompts ask for it and the parser
/// prefers it.
inline constexpr std::string_view kAnswerMarker = "Final grade:";
inline constexpr std::string_view kRecordHeader = "Record to evaluate:";
inline constexpr std::size_t kDefaultFewShotK = 3;

inline constexpr std::string_view kDefaultSystemText =
    "You are an expert evaluator performing {task}.\n"
    "Assess the record below on the listed criteria and assign exactly one grade from: {grades} "
    "(ordered from best to worst).";

struct PromptTemplate {
    std::string system_text = std::string(kDefaultSystemText);
    PromptMode mode = PromptMode::ZeroShot;
    bool weighted = false;
    std::size_t few_shot_k = 0;

    std::string id() const { return std::string(to_string(mode)) + (weighted ? "+weighted" : ""); }

    void check() const {
        if (uses_exemplars(mode) != (few_shot_k > 0)) {
            throw Error(ErrorKind::InvalidArgument,
                        "template " + id() + ": few_shot_k must be positive exactly for few-shot modes");
        }
    }
};

/// Parses "few-shot", "cot+weighted", "few-shot-cot:weighted", ...
inline PromptTemplate parse_template_spec(std::string_view spec, std::size_t few_shot_k = kDefaultFewShotK) {
    std::string s = text::normalize(spec);
    PromptTemplate t;
    for (std::string_view suffix : {"+weighted", ":weighted"}) {
        if (s.size() > suffix.size() && s.ends_with(suffix)) {
            t.weighted = true;
            s.resize(s.size() - suffix.size());
        }
    }
    if (s == "zero-shot") {
        t.mode = PromptMode::ZeroShot;
    } else if (s == "few-shot") {
        t.mode = PromptMode::FewShot;
    } else if (s == "cot") {
        t.mode = PromptMode::CoT;
    } else if (s == "few-shot-cot") {
        t.mode = PromptMode::FewShotCoT;
    } else {
        throw Error(ErrorKind::Config, "unknown prompt template \"" + std::string(spec) + "\"");
    }
    t.few_shot_k = uses_exemplars(t.mode) ? few_shot_k : 0;
    t.check();
    return t;
}

struct PromptContext {
    std::string text;
    long problem_id = 0;
    std::string template_id;
    PromptMode mode = PromptMode::ZeroShot;
};

namespace detail {

inline std::string percent(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", w * 100.0);
    return buf;
}

inline void render_levels(std::ostringstream& os, const MappedRecord& r) {
    for (const auto& [dim, level] : r.levels) os << "- " << dim << ": " << level << '\n';
}

inline void render_reasoning(std::ostringstream& os, const DecisionModel& model, const MappedRecord& r) {
    os << "Reasoning:\n";
    for (const auto& dim : model.dimensions) {
        const auto& level = r.level(dim.name);
        const auto order = dim.rank_order();
        std::size_t rank = 0;
        if (auto c = dim.find_criterion(level)) {
            while (order[rank] != *c) ++rank;
        }
        os << "- " << dim.name << " is \"" << level << "\", level " << rank + 1 << " of " << order.size()
           << " (best first).\n";
    }
}

}  // namespace detail

/// Weight table listing dimension, criterion and overall weights.
inline std::string render_weight_table(const DecisionModel& model) {
    std::ostringstream os;
    os << "Criterion weights (dimension weight; criterion weight within dimension, overall weight):\n";
    const auto overall = compose_overall(model);
    std::size_t k = 0;
    for (const auto& dim : model.dimensions) {
        os << "- " << dim.name << ": " << detail::percent(dim.weight) << '\n';
        for (const auto& c : dim.criteria) {
            os << "  - " << c.name << ": " << detail::percent(c.weight) << " (overall "
               << detail::percent(overall[k++].weight) << ")\n";
        }
    }
    return os.str();
}

/// Judge input for one record. Pure: identical arguments give identical text.
inline PromptContext render(const PromptTemplate& tmpl, const DecisionModel& model, const MappedRecord& record,
                            const std::vector<LabeledExample>& exemplars, long problem_id = 0) {
    tmpl.check();
    if (exemplars.size() != tmpl.few_shot_k) {
        throw Error(ErrorKind::InvalidArgument, "template " + tmpl.id() + " expects " +
                                                    std::to_string(tmpl.few_shot_k) + " exemplars, got " +
                                                    std::to_string(exemplars.size()));
    }
    for (const auto& ex : exemplars) {
        if (ex.mapped.same_identity(record)) {
            throw Error(ErrorKind::ExemplarLeak, "exemplar " + ex.mapped.source + "#" +
                                                     std::to_string(ex.mapped.row_index) +
                                                     " is the record under evaluation");
        }
    }

    std::string system = tmpl.system_text;
    const auto replace = [&system](std::string_view key, const std::string& value) {
        for (auto pos = system.find(key); pos != std::string::npos; pos = system.find(key, pos + value.size())) {
            system.replace(pos, key.size(), value);
        }
    };
    replace("{task}", model.task.empty() ? model.name + " evaluation" : model.task);
    replace("{grades}", text::join(model.grades.labels(), ", "));
    replace("{domain}", model.name);

    const bool reasoning = uses_reasoning(tmpl.mode);
    std::ostringstream os;
    os << system << "\n\n";
    if (tmpl.weighted) os << render_weight_table(model) << '\n';

    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        os << "Example " << i + 1 << ":\n";
        detail::render_levels(os, exemplars[i].mapped);
        if (reasoning) detail::render_reasoning(os, model, exemplars[i].mapped);
        os << kAnswerMarker << ' ' << exemplars[i].grade << "\n\n";
    }

    os << kRecordHeader << '\n';
    detail::render_levels(os, record);
    os << '\n';
    if (reasoning) {
        os << "Think step by step: consider each criterion in turn, explain how it affects the grade, "
              "then give the final grade on the last line in the form \""
           << kAnswerMarker << " <grade>\".\n";
    } else {
        os << "Respond with the grade only, on a single line of the form \"" << kAnswerMarker << " <grade>\".\n";
    }
    return {os.str(), problem_id, tmpl.id(), tmpl.mode};
}

/// Stratified round-robin over grades (best grade first), each grade's pool
/// shuffled by the seed.
inline std::vector<LabeledExample> select_exemplars(const std::vector<LabeledExample>& train, std::size_t k,
                                                    std::uint64_t seed, const GradeSet& grades) {
    if (k > train.size()) {
        throw Error(ErrorKind::InsufficientExamples,
                    "need " + std::to_string(k) + " exemplars but the pool has " + std::to_string(train.size()));
    }
    if (k == 0) return {};
    std::vector<std::vector<std::size_t>> by_grade(grades.size());
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (auto g = grades.find(train[i].grade)) {
            by_grade[*g].push_back(i);
        } else {
            unlabeled.push_back(i);
        }
    }
    Rng rng(seed);
    for (auto& pool : by_grade) rng.shuffle(std::span<std::size_t>(pool));
    rng.shuffle(std::span<std::size_t>(unlabeled));
    by_grade.push_back(std::move(unlabeled));

    std::vector<LabeledExample> out;
    std::vector<std::size_t> cursor(by_grade.size(), 0);
    while (out.size() < k) {
        for (std::size_t g = 0; g < by_grade.size() && out.size() < k; ++g) {
            if (cursor[g] < by_grade[g].size()) out.push_back(train[by_grade[g][cursor[g]++]]);
        }
    }
    return out;
}

/// Reads the "Record to evaluate" block of a rendered prompt back into levels.
inline MappedRecord parse_prompt_record(std::string_view prompt) {
    const auto lines = text::split_lines(prompt);
    std::size_t start = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]) == kRecordHeader) start = i + 1;
    }
    if (start == lines.size()) throw Error(ErrorKind::InvalidArgument, "prompt has no record block");
    MappedRecord r;
    for (std::size_t i = start; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty()) break;
        if (!line.starts_with("- ")) break;
        const auto colon = line.find(": ");
        if (colon == std::string_view::npos) break;
        r.levels.emplace_back(std::string(line.substr(2, colon - 2)), std::string(line.substr(colon + 2)));
    }
    return r;
}

}  // namespace mcdm
