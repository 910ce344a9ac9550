// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "lora_oracle.hpp"
#include "metric_oracle.hpp"
#include "mcdm/fce.hpp"
#include "mcdm/hierarchy.hpp"
#include "test_support.hpp"

using namespace mcdm;
using namespace mcdm::cli;
using mcdm::testing::data_path;
using mcdm::testing::scratch_dir;
using mcdm::testing::slurp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    double time_limit_s = 0.0;  // 0: no limit
};

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

// --- 1: overall weights of the bundled supplier model -------------------------

Outcome published_overall_weights() {
    const auto model = load_model(data_path("models/supplier.json"));
    const std::vector<double> published = {12.40, 4.45,  7.46, 1.91, 1.88, 3.58, 7.29, 14.77, 28.97,
                                           6.64,  3.08,  1.38, 0.65, 2.20, 1.33, 0.95, 0.65,  0.40};
    const auto overall = compose_overall(model);
    if (overall.size() != published.size()) return {false, "expected 18 criteria, got " + std::to_string(overall.size())};
    double worst = 0.0;
    for (std::size_t i = 0; i < overall.size(); ++i) worst = std::max(worst, std::abs(overall[i].weight - published[i] / 100));
    return {worst <= 0.0005, "18 weights, max abs error " + fmt(worst), 1.0};
}

// --- 2: consistent AHP matrices ----------------------------------------------------

Outcome ahp_round_trip() {
    Rng rng(20240601);
    double worst_w = 0.0, worst_cr = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 2 + rng.below(8);
        const auto w = mcdm::testing::random_weights(rng, n);
        const auto m = SaatyMatrix::consistent(w);
        const auto e = principal_weights(m);
        for (std::size_t i = 0; i < n; ++i) worst_w = std::max(worst_w, std::abs(e.weights[i] - w[i]));
        worst_cr = std::max(worst_cr, std::abs(consistency_ratio(m, e.lambda_max)));
    }
    return {worst_w <= 1e-8 && worst_cr <= 1e-8,
            "200 vectors, max weight error " + fmt(worst_w) + ", max |CR| " + fmt(worst_cr), 5.0};
}

// --- 3: flat vs hierarchical synthesis ---------------------------------------------

Outcome fce_equivalence() {
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = mcdm::testing::random_model(rng);
        FactorRatings r;
        std::vector<std::vector<double>> rows;
        std::vector<double> w;
        for (const auto& o : compose_overall(m)) {
            auto row = mcdm::testing::random_row(rng, m.grades.size());
            r[{o.dimension, o.criterion}] = row;
            rows.push_back(row);
            w.push_back(o.weight);
        }
        const auto hier = evaluate_hierarchical(m, r, SynthesisOperator::WeightedAverage);
        const auto flat = synthesize(WeightVector::checked(w), FuzzyRatingMatrix::from_rows(rows),
                                     SynthesisOperator::WeightedAverage);
        for (std::size_t j = 0; j < flat.size(); ++j) worst = std::max(worst, std::abs(hier.membership[j] - flat[j]));
    }
    return {worst <= 1e-9, "100 models, max abs difference " + fmt(worst)};
}

// --- 4: zero-noise oracle through the full judge pipeline --------------------------

Outcome oracle_closure() {
    RunConfig cfg;
    cfg.out = scratch_dir("acceptance-closure");
    cfg.fixtures = 200;
    cfg.templates = {"zero-shot", "few-shot", "cot", "few-shot-cot"};
    std::ostringstream out, err;
    const int status = cmd_judge_run(cfg, {out, err});
    if (status != 0) return {false, "judge run exited " + std::to_string(status) + ": " + err.str()};
    std::string detail;
    bool pass = true;
    for (const auto& t : cfg.templates) {
        const auto r = read_report(cfg.out / "reports" / ("oracle__" + t + ".json"));
        const bool perfect = r.macro.precision == 1.0 && r.macro.recall == 1.0 && r.macro.f1 == 1.0 &&
                             r.confusion.total() == 200 && r.confusion.unparsed == 0;
        pass = pass && perfect;
        detail += t + (perfect ? "=1.000 " : "=" + fmt(r.macro.f1, 4) + " ");
    }
    return {pass, "200 fixtures, macro P/R/F1 " + detail};
}

// --- 5: metrics vs brute-force tally --------------------------------------------------

Outcome metric_oracle() {
    Rng rng(2718);
    double worst = 0.0;
    bool counts_equal = true;
    for (int trial = 0; trial < 50; ++trial) {
        const auto [pairs, labels] = mcdm::testing::random_predictions(rng);
        const auto cm = mcdm::testing::confusion_of(pairs, labels);
        const auto o = mcdm::testing::brute_force(pairs, labels);
        const auto r = make_report(cm, {});
        counts_equal = counts_equal && cm.counts == o.counts && cm.unparsed == o.unparsed;
        for (std::size_t k = 0; k < labels.size(); ++k) {
            counts_equal = counts_equal && r.per_class[k].support == o.classes[k].support;
            worst = std::max({worst, std::abs(r.per_class[k].precision - o.classes[k].p),
                              std::abs(r.per_class[k].recall - o.classes[k].r),
                              std::abs(r.per_class[k].f1 - o.classes[k].f1)});
        }
        worst = std::max({worst, std::abs(r.macro.precision - o.macro_p), std::abs(r.macro.recall - o.macro_r),
                          std::abs(r.macro.f1 - o.macro_f1)});
    }
    return {counts_equal && worst <= 1e-12,
            std::string("50 sets, counts ") + (counts_equal ? "exact" : "DIFFER") + ", max ratio error " + fmt(worst)};
}

// --- 6: adapter math ------------------------------------------------------------------

Outcome lora_math() {
    Rng rng(77);
    double worst_grad = 0.0, worst_merge = 0.0;
    int identity_failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = mcdm::testing::random_lora_instance(rng);
        worst_grad = std::max(worst_grad, mcdm::testing::max_gradient_error(in, 1e-5));
        identity_failures += mcdm::testing::zero_adapter_mismatches(rng, in.base, in.ad, 100);
        worst_merge = std::max(worst_merge, mcdm::testing::merge_discrepancy(rng, in.base, in.ad, 100));
    }
    return {worst_grad <= 1e-4 && identity_failures == 0 && worst_merge == 0.0,
            "20 instances, max gradient rel error " + fmt(worst_grad) + ", identity mismatches " +
                std::to_string(identity_failures) + ", merge max diff " + fmt(worst_merge)};
}

// --- 7: vanilla vs tuned surrogate -------------------------------------------------------

Outcome tuned_gap() {
    RunConfig cfg;  // defaults: seed 1, 600 fixtures, 500 train, perturbation 1
    const auto dc = load_domain(cfg);
    const auto r = finetune(cfg, dc);
    const double before = r.before.macro.f1, after = r.after.macro.f1;
    return {before <= 0.75 && after >= 0.95,
            "seed 1, 500/100 split, base macro-F1 " + fmt(before, 4) + ", tuned macro-F1 " + fmt(after, 4), 30.0};
}

// --- 8: comparison direction follows noise ------------------------------------------------

Outcome compare_direction() {
    const auto root = scratch_dir("acceptance-compare");
    auto run_at = [&](double eps, const std::string& name) {
        RunConfig cfg;
        cfg.out = root / name;
        cfg.backends[0].noise = eps;
        std::ostringstream out, err;
        if (cmd_judge_run(cfg, {out, err}) != 0) throw Error(ErrorKind::Io, "judge run failed: " + err.str());
        return cfg.out / "reports" / "oracle__zero-shot.json";
    };
    const auto low = run_at(0.1, "low");
    const auto high = run_at(0.4, "high");
    std::ostringstream out, err;
    if (cmd_compare(low, high, root / "cmp", {out, err}) != 0) return {false, "compare failed: " + err.str()};
    const auto delta = read_json_file(root / "cmp" / "delta.json");
    double macro_f1 = 0.0, macro_p = 0.0, macro_r = 0.0;
    for (const auto& row : delta.at("deltas")) {
        if (row.at("scope") == "macro") {
            macro_p = row.at("precision");
            macro_r = row.at("recall");
            macro_f1 = row.at("f1");
        }
    }
    return {macro_f1 < 0 && macro_p < 0 && macro_r < 0,
            "eps 0.1 -> 0.4, macro delta P " + fmt(macro_p, 4) + " R " + fmt(macro_r, 4) + " F1 " + fmt(macro_f1, 4)};
}

// --- 9: byte-identical reruns ---------------------------------------------------------------

Outcome determinism() {
    auto run_all = [](const fs::path& root) {
        std::ostringstream out, err;
        RunConfig cfg;
        cfg.out = root / "fixtures";
        if (cmd_data_synth(cfg, 500, {out, err}) != 0) throw Error(ErrorKind::Io, err.str());
        cfg.out = root / "finetune";
        if (cmd_finetune(cfg, {out, err}) != 0) throw Error(ErrorKind::Io, err.str());
        cfg.out = root / "judge";
        cfg.templates = {"zero-shot", "few-shot-cot+weighted"};
        cfg.backends[0].noise = 0.3;
        cfg.parallelism = 4;
        if (cmd_judge_run(cfg, {out, err}) != 0) throw Error(ErrorKind::Io, err.str());
    };
    const auto a = scratch_dir("acceptance-det-a");
    const auto b = scratch_dir("acceptance-det-b");
    run_all(a);
    run_all(b);
    std::size_t files = 0;
    bool same = true;
    for (const auto* stage : {"fixtures", "finetune", "judge"}) {
        const auto ma = slurp(a / stage / kManifestName);
        same = same && !ma.empty() && ma == slurp(b / stage / kManifestName);
        files += read_json_file(a / stage / kManifestName).at("files").size();
    }
    return {same, "3 stages, " + std::to_string(files) + " artifacts, manifests " + (same ? "equal" : "DIFFER")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"published overall weights", published_overall_weights},
        {"AHP round trip", ahp_round_trip},
        {"FCE flat/hierarchical equivalence", fce_equivalence},
        {"oracle pipeline closure", oracle_closure},
        {"metrics vs brute force", metric_oracle},
        {"adapter math", lora_math},
        {"base vs tuned surrogate", tuned_gap},
        {"compare direction", compare_direction},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.time_limit_s > 0 && secs >= o.time_limit_s) {
            o.pass = false;
            o.detail += ", over the " + fmt(o.time_limit_s) + "s budget";
        }
        failures += !o.pass;
        std::printf("[%s] %zu. %s: %s (%.3fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
