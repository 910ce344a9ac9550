#pragma once

#include <cctype>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcdm/datasets.hpp"
#include "mcdm/error.hpp"
#include "mcdm/grades.hpp"
#include "mcdm/prompt.hpp"
#include "mcdm/rng.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

struct Completion {
    std::string text;
    std::chrono::milliseconds latency{0};
};

/// A language-model judge, or anything that answers prompts like one.
class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual const std::string& id() const = 0;
    /// True when equal prompts always get equal completions.
    virtual bool deterministic() const = 0;
    virtual Completion complete(const PromptContext& ctx) = 0;
};

/// Calls the backend; failures surface as JudgeError tagged with backend and
/// problem. Retrying is the backend's concern.
inline Completion invoke(JudgeBackend& backend, const PromptContext& ctx) {
    try {
        return backend.complete(ctx);
    } catch (const JudgeError&) {
        throw;
    } catch (const Error& e) {
        throw JudgeError(e.kind(), backend.id(), ctx.problem_id, e.what());
    } catch (const std::exception& e) {
        throw JudgeError(ErrorKind::Transport, backend.id(), ctx.problem_id, e.what());
    }
}

namespace detail {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Distinct grade indices occurring as whole words in s.
inline std::vector<std::size_t> grades_in(std::string_view s, const GradeSet& grades) {
    const auto hay = text::fold(s);
    std::vector<std::size_t> found;
    for (std::size_t g = 0; g < grades.size(); ++g) {
        const auto needle = text::fold(grades.label(g));
        for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
            const bool left = pos == 0 || !is_word_char(hay[pos - 1]);
            const auto end = pos + needle.size();
            const bool right = end >= hay.size() || !is_word_char(hay[end]);
            if (left && right) {
                found.push_back(g);
                break;
            }
        }
    }
    return found;
}

inline std::optional<std::string> pick_unique(std::string_view s, const GradeSet& grades, std::string_view where) {
    const auto found = grades_in(s, grades);
    if (found.size() == 1) return grades.label(found.front());
    if (found.size() > 1) {
        std::vector<std::string> names;
        for (auto g : found) names.push_back(grades.label(g));
        throw Error(ErrorKind::Ambiguous, std::string(where) + " names several grades: " + text::join(names, ", "));
    }
    return std::nullopt;
}

inline std::string_view strip_decoration(std::string_view line) {
    line = text::trim(line);
    while (!line.empty() && (line.front() == '*' || line.front() == '#' || line.front() == '>' || line.front() == '-')) {
        line.remove_prefix(1);
        line = text::trim(line);
    }
    return line;
}

}  // namespace detail

struct ParsedVerdict {
    std::string grade;
    /// Text preceding the answer line, when an answer line was found.
    std::optional<std::string> rationale;
};

/// Grade from a completion: the last "Final grade:" line wins, else the last
/// non-empty line, else the whole text. With require_marker (chain of
/// thought) only the marked line counts.
inline ParsedVerdict parse_verdict_detailed(std::string_view raw, const GradeSet& grades, bool require_marker = false) {
    const auto lines = text::split_lines(raw);
    for (std::size_t i = lines.size(); i-- > 0;) {
        const auto line = detail::strip_decoration(lines[i]);
        if (!text::starts_with_ci(line, kAnswerMarker)) continue;
        if (auto g = detail::pick_unique(line.substr(kAnswerMarker.size()), grades, "answer line")) {
            std::string rationale;
            for (std::size_t j = 0; j < i; ++j) rationale += lines[j] + (j + 1 < i ? "\n" : "");
            std::optional<std::string> r;
            if (!text::trim(rationale).empty()) r = std::string(text::trim(rationale));
            return {*g, r};
        }
        throw Error(ErrorKind::Unparseable, "answer line names no grade");
    }
    if (require_marker) {
        throw Error(ErrorKind::Unparseable, "no \"" + std::string(kAnswerMarker) + "\" line in completion");
    }
    for (std::size_t i = lines.size(); i-- > 0;) {
        if (text::trim(lines[i]).empty()) continue;
        if (auto g = detail::pick_unique(lines[i], grades, "last line")) return {*g, std::nullopt};
        break;
    }
    if (auto g = detail::pick_unique(raw, grades, "completion")) return {*g, std::nullopt};
    throw Error(ErrorKind::Unparseable, "completion names no grade");
}

inline std::string parse_verdict(std::string_view raw, const GradeSet& grades, bool require_marker = false) {
    return parse_verdict_detailed(raw, grades, require_marker).grade;
}

using TruthFn = std::function<std::string(const PromptContext&)>;

/// Reference judge: answers with the expert grade, flipped to a uniformly
/// chosen other grade with probability `noise`. The coin for a (problem,
/// template) pair depends only on the seed, so the backend is pure.
class OracleBackend final : public JudgeBackend {
public:
    OracleBackend(std::string id, TruthFn truth, GradeSet grades, double noise = 0.0, std::uint64_t seed = 0)
        : id_(std::move(id)), truth_(std::move(truth)), grades_(std::move(grades)), noise_(noise), seed_(seed) {
        if (!(noise_ >= 0.0 && noise_ <= 1.0)) throw Error(ErrorKind::InvalidArgument, "noise must lie in [0, 1]");
    }

    const std::string& id() const override { return id_; }
    bool deterministic() const override { return true; }
    double noise() const noexcept { return noise_; }

    /// Grade the oracle will answer for this prompt.
    std::string answer(const PromptContext& ctx) const {
        const auto truth = grades_.index_of(truth_(ctx));
        Rng rng(derive_seed(derive_seed(seed_, static_cast<std::uint64_t>(ctx.problem_id)), ctx.template_id));
        if (rng.uniform() < noise_) {
            const auto other = rng.below(grades_.size() - 1);
            return grades_.label(other < truth ? other : other + 1);
        }
        return grades_.label(truth);
    }

    Completion complete(const PromptContext& ctx) override {
        const auto grade = answer(ctx);
        if (uses_reasoning(ctx.mode)) {
            return {"Each criterion was weighed against the rubric.\n" + std::string(kAnswerMarker) + " " + grade,
                    std::chrono::milliseconds{0}};
        }
        return {"Grade: " + grade, std::chrono::milliseconds{0}};
    }

private:
    std::string id_;
    TruthFn truth_;
    GradeSet grades_;
    double noise_;
    std::uint64_t seed_;
};

/// Truth recomputed by AHP-FCE from the record block of the prompt itself.
inline TruthFn fce_truth(DecisionModel model) {
    return [model = std::move(model)](const PromptContext& ctx) {
        return fce_grade(model, parse_prompt_record(ctx.text));
    };
}

/// Truth looked up by problem id, for label-column domains.
inline TruthFn table_truth(std::map<long, std::string> grades_by_problem) {
    return [table = std::move(grades_by_problem)](const PromptContext& ctx) {
        const auto it = table.find(ctx.problem_id);
        if (it == table.end()) {
            throw Error(ErrorKind::InvalidArgument, "no ground truth for problem " + std::to_string(ctx.problem_id));
        }
        return it->second;
    };
}

}  // namespace mcdm
