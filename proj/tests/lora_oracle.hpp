#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcdm/lora.hpp"
#include "mcdm/rng.hpp"

// Central finite-difference reference for the adapter gradients.
namespace mcdm::testing {

struct LoraInstance {
    LinearModel base;
    AdapterPair ad;
    std::vector<Sample> batch;
};

/// G <= 4, F <= 18, r <= min(G, F, 4), both adapters non-zero.
inline LoraInstance random_lora_instance(Rng& rng, std::size_t batch_size = 3) {
    const auto G = 2 + rng.below(3);
    const auto F = 2 + rng.below(17);
    const auto r = 1 + rng.below(std::min<std::size_t>({G, F, 4}));
    LoraInstance in;
    in.base = {Matrix(G, F), std::vector<double>(G), true};
    for (double& v : in.base.W.data()) v = rng.normal(0.0, 1.0);
    for (double& v : in.base.b) v = rng.normal(0.0, 0.5);
    in.ad = {Matrix(G, r), Matrix(F, r), r, 0.5 + 4.0 * rng.uniform(), 0.5, 0};
    for (double& v : in.ad.A.data()) v = rng.normal(0.0, 0.5);
    for (double& v : in.ad.B.data()) v = rng.normal(0.0, 0.5);
    for (std::size_t i = 0; i < batch_size; ++i) {
        Sample s{std::vector<double>(F), rng.below(G)};
        for (double& v : s.x) v = rng.normal(0.0, 1.0);
        in.batch.push_back(std::move(s));
    }
    return in;
}

/// |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor keeps
/// near-zero entries from turning rounding noise into huge ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Worst relative error over every entry of A and B.
inline double max_gradient_error(const LoraInstance& in, double h = 1e-5) {
    const auto lg = loss_and_grads(in.base, in.ad, in.batch);
    double worst = 0.0;
    auto probe = [&](Matrix AdapterPair::*which, const Matrix& grad) {
        for (std::size_t i = 0; i < grad.data().size(); ++i) {
            AdapterPair plus = in.ad, minus = in.ad;
            (plus.*which).data()[i] += h;
            (minus.*which).data()[i] -= h;
            const double numeric = (mean_loss(in.base, plus, in.batch) - mean_loss(in.base, minus, in.batch)) / (2 * h);
            worst = std::max(worst, relative_error(grad.data()[i], numeric));
        }
    };
    probe(&AdapterPair::A, lg.grad_a);
    probe(&AdapterPair::B, lg.grad_b);
    return worst;
}

/// Max |adapter-form logit - merged logit| over `inputs` random inputs.
inline double merge_discrepancy(Rng& rng, const LinearModel& base, const AdapterPair& ad, int inputs) {
    const auto merged = merge(base, ad);
    double worst = 0.0;
    std::vector<double> x(base.features());
    for (int i = 0; i < inputs; ++i) {
        for (double& v : x) v = rng.normal(0.0, 1.0);
        const auto a = adapter_logits(base, ad, x);
        const auto m = logits(merged, x);
        for (std::size_t g = 0; g < a.size(); ++g) worst = std::max(worst, std::abs(a[g] - m[g]));
        if (predict(base, ad, x) != predict(merged, x)) worst = std::max(worst, 1.0);
    }
    return worst;
}

/// Count of random inputs on which a B = 0 adapter changes base logits.
inline int zero_adapter_mismatches(Rng& rng, const LinearModel& base, AdapterPair ad, int inputs) {
    std::fill(ad.B.data().begin(), ad.B.data().end(), 0.0);
    int bad = 0;
    std::vector<double> x(base.features());
    for (int i = 0; i < inputs; ++i) {
        for (double& v : x) v = rng.normal(0.0, 1.0);
        bad += adapter_logits(base, ad, x) != logits(base, x);
        bad += predict(base, ad, x) != predict(base, x);
    }
    return bad;
}

}  // namespace mcdm::testing
