#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcdm/csv.hpp"
#include "mcdm/datasets.hpp"
#include "mcdm/error.hpp"
#include "mcdm/hierarchy.hpp"
#include "mcdm/matrix.hpp"
#include "mcdm/rng.hpp"

// Desk-scale low-rank adaptation: a frozen softmax classifier over one-hot
// criterion levels stands in for the pretrained language model, and a rank-r
// update dW = (alpha / r) A B^T is learned on top of it. A is G x r and
// Gaussian-initialized, B is F x r and starts at zero.

namespace mcdm {

/// One-hot block per dimension (criteria in model order), exactly one 1 per
/// block.
inline std::vector<double> encode_features(const MappedRecord& mapped, const DecisionModel& model) {
    std::vector<double> x;
    x.reserve(model.criterion_count());
    for (const auto& dim : model.dimensions) {
        const auto c = dim.find_criterion(mapped.level(dim.name));
        if (!c) {
            throw Error(ErrorKind::UnmappableLevel, dim.name + ": \"" + mapped.level(dim.name) + "\" is not a level");
        }
        for (std::size_t i = 0; i < dim.criteria.size(); ++i) x.push_back(i == *c ? 1.0 : 0.0);
    }
    return x;
}

struct Sample {
    std::vector<double> x;
    std::size_t label = 0;
};

inline std::vector<Sample> to_samples(const std::vector<LabeledExample>& examples, const DecisionModel& model) {
    std::vector<Sample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back({encode_features(ex.mapped, model), model.grades.index_of(ex.grade)});
    return out;
}

struct LinearModel {
    Matrix W;  // G x F
    std::vector<double> b;
    bool frozen = false;

    std::size_t grades() const noexcept { return W.rows(); }
    std::size_t features() const noexcept { return W.cols(); }
};

struct AdapterPair {
    Matrix A;  // G x r
    Matrix B;  // F x r
    std::size_t rank = 0;
    double alpha = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    double scale() const { return alpha / static_cast<double>(rank); }
};

struct TrainConfig {
    int steps = 2000;
    double lr = 0.1;
    std::size_t batch = 32;
    double sigma = 0.02;
    std::uint64_t seed = 0;
    std::size_t rank = 4;
    double alpha = 8.0;
    // Full-batch gradient descent used to fit the frozen base.
    int base_steps = 2000;
    double base_lr = 0.5;

    void check() const {
        if (steps < 0 || !(lr > 0.0) || batch == 0 || !(sigma > 0.0) || rank == 0 || base_steps < 0 ||
            !(base_lr > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "train config values must be positive");
        }
    }
};

inline void check_shapes(const LinearModel& base, const AdapterPair& ad) {
    if (base.b.size() != base.grades() || ad.A.rows() != base.grades() || ad.B.rows() != base.features() ||
        ad.A.cols() != ad.rank || ad.B.cols() != ad.rank || ad.rank == 0) {
        throw Error(ErrorKind::ShapeMismatch, "adapter shapes do not match the base model");
    }
}

/// W + (alpha/r) A B^T. Merge and adapter-form inference both go through this
/// one routine, so their arithmetic is identical.
inline Matrix effective_weights(const LinearModel& base, const AdapterPair& ad) {
    check_shapes(base, ad);
    const double s = ad.scale();
    Matrix w = base.W;
    for (std::size_t g = 0; g < base.grades(); ++g) {
        for (std::size_t f = 0; f < base.features(); ++f) {
            double acc = 0.0;
            for (std::size_t k = 0; k < ad.rank; ++k) acc += ad.A(g, k) * ad.B(f, k);
            w(g, f) += s * acc;
        }
    }
    return w;
}

inline std::vector<double> logits(const Matrix& W, std::span<const double> b, std::span<const double> x) {
    if (x.size() != W.cols() || b.size() != W.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "feature vector does not match the model");
    }
    std::vector<double> z(W.rows());
    for (std::size_t g = 0; g < W.rows(); ++g) {
        double acc = 0.0;
        for (std::size_t f = 0; f < W.cols(); ++f) acc += W(g, f) * x[f];
        z[g] = acc + b[g];
    }
    return z;
}

inline std::vector<double> logits(const LinearModel& m, std::span<const double> x) { return logits(m.W, m.b, x); }

inline std::vector<double> adapter_logits(const LinearModel& base, const AdapterPair& ad, std::span<const double> x) {
    return logits(effective_weights(base, ad), base.b, x);
}

/// Argmax; ties go to the lower (better) grade index.
inline std::size_t argmax(std::span<const double> z) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < z.size(); ++g) {
        if (z[g] > z[best]) best = g;
    }
    return best;
}

inline std::size_t predict(const LinearModel& m, std::span<const double> x) { return argmax(logits(m, x)); }

inline std::size_t predict(const LinearModel& base, const AdapterPair& ad, std::span<const double> x) {
    return argmax(adapter_logits(base, ad, x));
}

namespace detail {

/// Softmax probabilities and -log p[label], computed stably.
inline double softmax_xent(std::vector<double>& z, std::size_t label) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return -std::log(std::max(z[label], std::numeric_limits<double>::min()));
}

}  // namespace detail

struct LossAndGrads {
    double loss = 0.0;
    Matrix grad_a;  // G x r
    Matrix grad_b;  // F x r
};

/// Mean cross-entropy of softmax((W + s A B^T) x + b) and its gradients with
/// respect to A and B only. With G_W = mean (p - y) x^T:
/// dL/dA = s G_W B, dL/dB = s G_W^T A.
inline LossAndGrads loss_and_grads(const LinearModel& base, const AdapterPair& ad, std::span<const Sample> batch) {
    if (!base.frozen) throw Error(ErrorKind::InvalidArgument, "base model must be frozen");
    if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "empty batch");
    const auto G = base.grades();
    const auto F = base.features();
    const Matrix w = effective_weights(base, ad);

    Matrix gw(G, F);
    double loss = 0.0;
    for (const auto& s : batch) {
        auto p = logits(w, base.b, s.x);
        loss += detail::softmax_xent(p, s.label);
        p[s.label] -= 1.0;
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t f = 0; f < F; ++f) gw(g, f) += p[g] * s.x[f];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const double scale = ad.scale();

    LossAndGrads out{loss * inv_n, Matrix(G, ad.rank), Matrix(F, ad.rank)};
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t k = 0; k < ad.rank; ++k) {
            double acc = 0.0;
            for (std::size_t f = 0; f < F; ++f) acc += gw(g, f) * ad.B(f, k);
            out.grad_a(g, k) = scale * inv_n * acc;
        }
    }
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t k = 0; k < ad.rank; ++k) {
            double acc = 0.0;
            for (std::size_t g = 0; g < G; ++g) acc += gw(g, f) * ad.A(g, k);
            out.grad_b(f, k) = scale * inv_n * acc;
        }
    }
    return out;
}

/// Mean cross-entropy of adapter-form predictions over a data set.
inline double mean_loss(const LinearModel& base, const AdapterPair& ad, std::span<const Sample> data) {
    const Matrix w = effective_weights(base, ad);
    double loss = 0.0;
    for (const auto& s : data) {
        auto z = logits(w, base.b, s.x);
        loss += detail::softmax_xent(z, s.label);
    }
    return loss / static_cast<double>(data.size());
}

/// A ~ N(0, sigma^2), B = 0.
inline AdapterPair init_adapters(const LinearModel& base, const TrainConfig& cfg) {
    if (cfg.rank == 0 || cfg.rank > std::min(base.grades(), base.features())) {
        throw Error(ErrorKind::InvalidArgument, "adapter rank must lie in [1, min(G, F)]");
    }
    AdapterPair ad{Matrix(base.grades(), cfg.rank), Matrix(base.features(), cfg.rank), cfg.rank, cfg.alpha, cfg.sigma,
                   cfg.seed};
    Rng rng(derive_seed(cfg.seed, "adapter-init"));
    for (double& v : ad.A.data()) v = rng.normal(0.0, cfg.sigma);
    return ad;
}

struct TrainResult {
    AdapterPair adapters;
    /// Mini-batch loss before each update.
    std::vector<double> loss_trace;
};

/// Exactly cfg.steps plain gradient-descent updates of A and B on seeded,
/// reshuffled-per-epoch mini-batches. The base is never written.
inline TrainResult train(const LinearModel& base, const TrainConfig& cfg, const std::vector<Sample>& data) {
    cfg.check();
    if (data.empty() && cfg.steps > 0) throw Error(ErrorKind::InvalidArgument, "no training data");
    TrainResult out{init_adapters(base, cfg), {}};
    auto& ad = out.adapters;
    out.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));

    Rng rng(derive_seed(cfg.seed, "batches"));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();
    std::vector<Sample> batch;

    for (int step = 1; step <= cfg.steps; ++step) {
        batch.clear();
        while (batch.size() < std::min(cfg.batch, data.size())) {
            if (cursor == order.size()) {
                rng.shuffle(std::span<std::size_t>(order));
                cursor = 0;
            }
            batch.push_back(data[order[cursor++]]);
        }
        const auto lg = loss_and_grads(base, ad, batch);
        if (!std::isfinite(lg.loss)) throw DivergenceError(step);
        out.loss_trace.push_back(lg.loss);
        for (std::size_t i = 0; i < ad.A.data().size(); ++i) ad.A.data()[i] -= cfg.lr * lg.grad_a.data()[i];
        for (std::size_t i = 0; i < ad.B.data().size(); ++i) ad.B.data()[i] -= cfg.lr * lg.grad_b.data()[i];
    }
    return out;
}

/// Unfrozen copy with W' = W + (alpha/r) A B^T and b unchanged.
inline LinearModel merge(const LinearModel& base, const AdapterPair& ad) {
    return {effective_weights(base, ad), base.b, false};
}

/// Mixes dimension weights toward uniform: w' = (1 - t) w + t / D.
inline DecisionModel perturb_weights(DecisionModel model, double perturbation) {
    if (!(perturbation >= 0.0 && perturbation <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "perturbation must lie in [0, 1]");
    }
    const double uniform = 1.0 / static_cast<double>(model.dimensions.size());
    for (auto& d : model.dimensions) d.weight = (1.0 - perturbation) * d.weight + perturbation * uniform;
    return model;
}

/// Softmax regression fit by full-batch gradient descent on labels regraded
/// under perturbed dimension weights, returned frozen. This is the "vanilla"
/// model: good at a subtly different rubric than the one it is scored on.
inline LinearModel pretrain_base(const std::vector<LabeledExample>& train_set, const DecisionModel& model,
                                 double perturbation, const TrainConfig& cfg) {
    cfg.check();
    if (train_set.empty()) throw Error(ErrorKind::InvalidArgument, "empty training set");
    const auto perturbed = perturb_weights(model, perturbation);
    std::vector<Sample> data;
    for (const auto& ex : train_set) {
        data.push_back({encode_features(ex.mapped, model), model.grades.index_of(fce_grade(perturbed, ex.mapped))});
    }
    const auto G = model.grades.size();
    const auto F = data.front().x.size();
    LinearModel m{Matrix(G, F), std::vector<double>(G, 0.0), false};
    const double inv_n = 1.0 / static_cast<double>(data.size());

    for (int step = 0; step < cfg.base_steps; ++step) {
        Matrix gw(G, F);
        std::vector<double> gb(G, 0.0);
        for (const auto& s : data) {
            auto p = logits(m, s.x);
            detail::softmax_xent(p, s.label);
            p[s.label] -= 1.0;
            for (std::size_t g = 0; g < G; ++g) {
                gb[g] += p[g];
                for (std::size_t f = 0; f < F; ++f) gw(g, f) += p[g] * s.x[f];
            }
        }
        for (std::size_t g = 0; g < G; ++g) {
            m.b[g] -= cfg.base_lr * inv_n * gb[g];
            for (std::size_t f = 0; f < F; ++f) m.W(g, f) -= cfg.base_lr * inv_n * gw(g, f);
        }
    }
    m.frozen = true;
    return m;
}

// --- checkpoints -----------------------------------------------------------

inline nlohmann::json to_json(const AdapterPair& ad) {
    return {
        {"rank", ad.rank},
        {"alpha", ad.alpha},
        {"sigma", ad.sigma},
        {"seed", ad.seed},
        {"grades", ad.A.rows()},
        {"features", ad.B.rows()},
        {"A", std::vector<double>(ad.A.data().begin(), ad.A.data().end())},
        {"B", std::vector<double>(ad.B.data().begin(), ad.B.data().end())},
    };
}

inline AdapterPair adapters_from_json(const nlohmann::json& j) {
    AdapterPair ad;
    ad.rank = j.at("rank").get<std::size_t>();
    ad.alpha = j.at("alpha").get<double>();
    ad.sigma = j.at("sigma").get<double>();
    ad.seed = j.at("seed").get<std::uint64_t>();
    const auto G = j.at("grades").get<std::size_t>();
    const auto F = j.at("features").get<std::size_t>();
    const auto a = j.at("A").get<std::vector<double>>();
    const auto b = j.at("B").get<std::vector<double>>();
    if (a.size() != G * ad.rank || b.size() != F * ad.rank) {
        throw Error(ErrorKind::ShapeMismatch, "checkpoint matrices do not match their declared shapes");
    }
    ad.A = Matrix(G, ad.rank);
    ad.B = Matrix(F, ad.rank);
    std::copy(a.begin(), a.end(), ad.A.data().begin());
    std::copy(b.begin(), b.end(), ad.B.data().begin());
    return ad;
}

inline void write_loss_trace(std::ostream& out, const std::vector<double>& trace) {
    out << "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << csv::format_double(trace[i]) << '\n';
}

}  // namespace mcdm
