#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcdm/datasets.hpp"
#include "mcdm/error.hpp"
#include "mcdm/judge.hpp"
#include "mcdm/prompt.hpp"
#include "mcdm/repository.hpp"
#include "mcdm/rng.hpp"

namespace mcdm {

struct BenchmarkOptions {
    std::string domain;
    /// Exemplar source for few-shot templates; must not contain problems.
    std::vector<LabeledExample> exemplar_pool;
    std::uint64_t exemplar_seed = 0;
    /// Judge calls in flight at once. Results are committed in task order
    /// regardless.
    std::size_t parallelism = 1;
    Clock clock = utc_now;
    /// Stop after this many new records (simulates an interrupted run).
    std::size_t max_new_records = std::numeric_limits<std::size_t>::max();
    std::function<void(const std::string&)> log;
};

struct BenchmarkSummary {
    std::size_t added = 0;
    std::size_t skipped = 0;
    std::size_t unparsed = 0;
    std::vector<std::string> errors;
};

/// Problem x template x backend sweep. Keys already in the repository are
/// skipped; unparseable completions are stored under the sentinel grade;
/// judge failures are reported in the summary and not stored, so a rerun
/// retries them.
inline BenchmarkSummary run_benchmark(const std::vector<LabeledExample>& problems,
                                      const std::vector<PromptTemplate>& templates,
                                      const std::vector<std::shared_ptr<JudgeBackend>>& backends,
                                      const DecisionModel& model, Repository& repo, const BenchmarkOptions& opt = {}) {
    // Exemplars are fixed per template.
    std::vector<std::vector<LabeledExample>> exemplars;
    for (const auto& t : templates) {
        t.check();
        exemplars.push_back(select_exemplars(opt.exemplar_pool, t.few_shot_k,
                                             derive_seed(opt.exemplar_seed, t.id()), model.grades));
    }

    struct Task {
        long problem_id;
        std::size_t problem;
        std::size_t tmpl;
        std::size_t backend;
    };
    BenchmarkSummary summary;
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < problems.size(); ++p) {
        for (std::size_t t = 0; t < templates.size(); ++t) {
            for (std::size_t b = 0; b < backends.size(); ++b) {
                const RecordKey key{static_cast<long>(p), templates[t].id(), backends[b]->id()};
                if (repo.contains(key)) {
                    ++summary.skipped;
                } else {
                    tasks.push_back({static_cast<long>(p), p, t, b});
                }
            }
        }
    }

    struct Outcome {
        std::optional<RepositoryRecord> record;
        std::string error;
    };
    const auto run_task = [&](const Task& task) -> Outcome {
        const auto& tmpl = templates[task.tmpl];
        auto& backend = *backends[task.backend];
        const auto ctx = render(tmpl, model, problems[task.problem].mapped, exemplars[task.tmpl], task.problem_id);
        Completion c;
        try {
            c = invoke(backend, ctx);
        } catch (const JudgeError& e) {
            return {std::nullopt, e.what()};
        }
        RepositoryRecord r;
        r.problem_id = task.problem_id;
        r.template_id = tmpl.id();
        r.backend_id = backend.id();
        r.domain = opt.domain.empty() ? model.name : opt.domain;
        r.grade_labels = model.grades.labels();
        r.ground_truth = problems[task.problem].grade;
        r.verdict.raw_completion = c.text;
        r.verdict.backend_id = backend.id();
        r.verdict.latency = c.latency;
        try {
            auto parsed = parse_verdict_detailed(c.text, model.grades, uses_reasoning(tmpl.mode));
            r.verdict.grade = std::move(parsed.grade);
            r.verdict.rationale = std::move(parsed.rationale);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Unparseable && e.kind() != ErrorKind::Ambiguous) throw;
            r.verdict.grade = std::string(kUnparsedGrade);
        }
        return {std::move(r), {}};
    };

    const std::size_t width = std::max<std::size_t>(1, opt.parallelism);
    for (std::size_t start = 0; start < tasks.size() && summary.added < opt.max_new_records; start += width) {
        const std::size_t end = std::min(tasks.size(), start + width);
        std::vector<Outcome> outcomes;
        if (width == 1) {
            outcomes.push_back(run_task(tasks[start]));
        } else {
            std::vector<std::future<Outcome>> inflight;
            for (std::size_t i = start; i < end; ++i) {
                inflight.push_back(std::async(std::launch::async, run_task, tasks[i]));
            }
            for (auto& f : inflight) outcomes.push_back(f.get());
        }
        for (auto& o : outcomes) {
            if (summary.added >= opt.max_new_records) break;
            if (!o.record) {
                summary.errors.push_back(o.error);
                if (opt.log) opt.log(o.error);
                continue;
            }
            o.record->timestamp = opt.clock ? opt.clock() : std::string{};
            if (!o.record->parsed()) ++summary.unparsed;
            repo.append(*o.record);
            ++summary.added;
        }
    }
    return summary;
}

}  // namespace mcdm
