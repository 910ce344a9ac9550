#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mcdm/error.hpp"
#include "mcdm/grades.hpp"
#include "mcdm/matrix.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr double kReciprocalTolerance = 1e-9;
inline constexpr double kAcceptableConsistencyRatio = 0.1;

/// Non-negative weights summing to one.
class WeightVector {
public:
    WeightVector() = default;

    static WeightVector checked(std::vector<double> values, double tol = kWeightSumTolerance) {
        if (values.empty()) throw Error(ErrorKind::InvalidArgument, "empty weight vector");
        double sum = 0.0;
        for (double v : values) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw Error(ErrorKind::InvalidArgument, "weights must be finite and non-negative");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            std::ostringstream os;
            os << "weights sum to " << sum << ", expected 1";
            throw Error(ErrorKind::InvalidArgument, os.str());
        }
        WeightVector w;
        w.values_ = std::move(values);
        return w;
    }

    /// L1-normalizes non-negative values; throws when they sum to zero.
    static WeightVector normalized(std::vector<double> values) {
        double sum = 0.0;
        for (double v : values) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw Error(ErrorKind::InvalidArgument, "weights must be finite and non-negative");
            }
            sum += v;
        }
        if (values.empty() || !(sum > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "cannot normalize an all-zero weight vector");
        }
        for (double& v : values) v /= sum;
        WeightVector w;
        w.values_ = std::move(values);
        return w;
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
    std::vector<double> values_;
};

/// Positive reciprocal pairwise-comparison matrix.
class SaatyMatrix {
public:
    explicit SaatyMatrix(Matrix entries) : m_(std::move(entries)) {
        if (m_.rows() == 0 || m_.rows() != m_.cols()) {
            throw Error(ErrorKind::InvalidArgument, "judgment matrix must be square and non-empty");
        }
        const auto n = m_.rows();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double a = m_(i, j);
                if (!(a > 0.0) || !std::isfinite(a)) {
                    throw Error(ErrorKind::InvalidArgument, "judgment matrix entries must be positive");
                }
                if (i == j && std::abs(a - 1.0) > kReciprocalTolerance) {
                    throw Error(ErrorKind::InvalidArgument, "judgment matrix diagonal must be 1");
                }
                const double recip = 1.0 / m_(j, i);
                if (std::abs(a - recip) > kReciprocalTolerance * std::max(std::abs(a), std::abs(recip))) {
                    std::ostringstream os;
                    os << "entries (" << i << "," << j << ") and (" << j << "," << i
                       << ") are not reciprocal";
                    throw Error(ErrorKind::InvalidArgument, os.str());
                }
            }
        }
    }

    static SaatyMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        return SaatyMatrix(Matrix::from_rows(rows));
    }

    /// The perfectly consistent matrix a_ij = w_i / w_j.
    static SaatyMatrix consistent(std::span<const double> w) {
        Matrix m(w.size(), w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = i == j ? 1.0 : w[i] / w[j];
        }
        return SaatyMatrix(std::move(m));
    }

    std::size_t order() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& entries() const noexcept { return m_; }

private:
    Matrix m_;
};

struct PrincipalEigen {
    WeightVector weights;
    double lambda_max = 0.0;
    int iterations = 0;
};

/// Principal eigenvector by power iteration with L1 normalization each step.
inline PrincipalEigen principal_weights(const SaatyMatrix& m, int max_iter = 1000, double tol = 1e-10) {
    if (max_iter < 1) throw Error(ErrorKind::InvalidArgument, "max_iter must be >= 1");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");

    const auto n = m.order();
    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    std::vector<double> y(n);
    double lambda = 0.0;
    double residual = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * x[j];
            y[i] = acc;
        }
        // x sums to one, so the L1 norm of Mx estimates lambda_max.
        lambda = 0.0;
        for (double v : y) lambda += v;
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = y[i] / lambda;
            residual = std::max(residual, std::abs(next - x[i]));
            x[i] = next;
        }
        if (residual <= tol) {
            return {WeightVector::normalized(std::move(x)), lambda, it};
        }
    }
    throw NonConvergenceError(std::move(x), residual, max_iter);
}

/// Saaty random consistency indices for n = 1..15.
inline constexpr std::array<double, 15> kRandomIndex = {
    0.00, 0.00, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.51, 1.48, 1.56, 1.57, 1.59,
};

inline double random_index(std::size_t n) {
    if (n < 1 || n > kRandomIndex.size()) {
        throw Error(ErrorKind::UnsupportedOrder,
                    "no random index for order " + std::to_string(n) + " (supported: 1..15)");
    }
    return kRandomIndex[n - 1];
}

/// CR = ((lambda_max - n) / (n - 1)) / RI(n); zero for n <= 2.
inline double consistency_ratio(const SaatyMatrix& m, double lambda_max) {
    const auto n = m.order();
    const double ri = random_index(n);
    if (n <= 2) return 0.0;
    // Power iteration can land a few ulps below n on consistent matrices.
    if (lambda_max < static_cast<double>(n) - 1e-9 * static_cast<double>(n)) {
        throw Error(ErrorKind::InvalidArgument, "lambda_max must be >= n");
    }
    const double ci = std::max(0.0, lambda_max - static_cast<double>(n)) / static_cast<double>(n - 1);
    return ci / ri;
}

/// Half-open interval [lo, hi); infinite ends model open-ended bins.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const noexcept { return x >= lo && x < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct CategoricalLevels {
    /// Accepted spellings, matched case-insensitively; empty means "match the
    /// criterion name only".
    std::vector<std::string> labels;
    friend bool operator==(const CategoricalLevels&, const CategoricalLevels&) = default;
};

struct NumericBins {
    std::vector<Interval> bins;
    friend bool operator==(const NumericBins&, const NumericBins&) = default;
};

using LevelSpec = std::variant<CategoricalLevels, NumericBins>;

inline bool is_numeric(const LevelSpec& spec) { return std::holds_alternative<NumericBins>(spec); }

struct Criterion {
    std::string name;
    double weight = 0.0;
    LevelSpec levels;
};

struct Dimension {
    std::string name;
    double weight = 0.0;
    std::vector<Criterion> criteria;
    /// Set when criterion weights were derived from a judgment matrix.
    std::optional<double> consistency_ratio;

    std::optional<std::size_t> find_criterion(std::string_view criterion) const {
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            if (text::iequals(criteria[i].name, criterion)) return i;
        }
        return std::nullopt;
    }

    /// Criterion indices ordered best-first: descending weight, listing order
    /// breaking ties.
    std::vector<std::size_t> rank_order() const {
        std::vector<std::size_t> idx(criteria.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return criteria[a].weight > criteria[b].weight;
        });
        return idx;
    }
};

/// Criterion hierarchy for one evaluation domain.
struct DecisionModel {
    std::string name;
    /// One-sentence task statement used when rendering judge prompts.
    std::string task;
    GradeSet grades;
    std::vector<Dimension> dimensions;
    /// Tolerance on weight sums; published models carry rounded percentages.
    double weight_tolerance = kWeightSumTolerance;
    std::optional<double> consistency_ratio;

    std::optional<std::size_t> find_dimension(std::string_view dimension) const {
        for (std::size_t i = 0; i < dimensions.size(); ++i) {
            if (text::iequals(dimensions[i].name, dimension)) return i;
        }
        return std::nullopt;
    }

    const Dimension& dimension(std::string_view name) const {
        if (auto i = find_dimension(name)) return dimensions[*i];
        throw Error(ErrorKind::InvalidArgument, "unknown dimension \"" + std::string(name) + "\"");
    }

    std::size_t criterion_count() const {
        std::size_t n = 0;
        for (const auto& d : dimensions) n += d.criteria.size();
        return n;
    }
};

struct OverallWeight {
    std::string dimension;
    std::string criterion;
    double weight = 0.0;
};

/// overall = dimension weight x criterion weight, one entry per pair in
/// model order.
inline std::vector<OverallWeight> compose_overall(const DecisionModel& model) {
    std::vector<OverallWeight> out;
    out.reserve(model.criterion_count());
    for (const auto& d : model.dimensions) {
        for (const auto& c : d.criteria) out.push_back({d.name, c.name, d.weight * c.weight});
    }
    return out;
}

struct Violation {
    std::string field;
    std::string message;
    double discrepancy = 0.0;
};

namespace detail {

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

inline void check_sum(std::vector<Violation>& out, const std::string& field, const std::string& what,
                      double sum, double tol) {
    if (std::abs(sum - 1.0) > tol) {
        out.push_back({field, what + " sum " + fmt_num(sum), sum - 1.0});
    }
}

}  // namespace detail

/// Every DecisionModel invariant that fails, in model order. Empty iff valid.
inline std::vector<Violation> validate_model(const DecisionModel& model) {
    std::vector<Violation> out;
    const double tol = model.weight_tolerance;

    if (model.name.empty()) out.push_back({"name", "model name is empty", 0.0});
    if (model.grades.size() < 2) out.push_back({"grades", "grade set needs at least two grades", 0.0});
    if (model.dimensions.empty()) {
        out.push_back({"dimensions", "model has no dimensions", 0.0});
        return out;
    }

    double dim_sum = 0.0;
    std::set<std::string> dim_names;
    for (const auto& d : model.dimensions) {
        const std::string field = "dimensions[" + d.name + "]";
        dim_sum += d.weight;
        if (!(d.weight > 0.0) || d.weight > 1.0 + tol) {
            out.push_back({field + ".weight", "dimension weight " + detail::fmt_num(d.weight) +
                                                  " outside (0, 1]",
                           d.weight});
        }
        if (!dim_names.insert(text::normalize(d.name)).second) {
            out.push_back({field, "duplicate dimension name \"" + d.name + "\"", 0.0});
        }
        if (d.criteria.empty()) {
            out.push_back({field + ".criteria", "dimension has no criteria", 0.0});
            continue;
        }

        double crit_sum = 0.0;
        std::set<std::string> crit_names;
        std::set<std::string> labels;
        std::size_t numeric = 0;
        std::vector<Interval> bins;
        for (const auto& c : d.criteria) {
            const std::string cfield = field + ".criteria[" + c.name + "]";
            crit_sum += c.weight;
            if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
                out.push_back({cfield + ".weight", "criterion weight must be non-negative", c.weight});
            }
            if (!crit_names.insert(text::normalize(c.name)).second) {
                out.push_back({cfield, "duplicate criterion name \"" + c.name + "\"", 0.0});
                continue;
            }
            if (const auto* cat = std::get_if<CategoricalLevels>(&c.levels)) {
                std::vector<std::string> spellings = cat->labels;
                if (spellings.empty()) spellings.push_back(c.name);
                for (const auto& l : spellings) {
                    if (!labels.insert(text::normalize(l)).second) {
                        out.push_back({cfield + ".levels", "level label \"" + l + "\" is not unique", 0.0});
                    }
                }
            } else {
                ++numeric;
                const auto& nb = std::get<NumericBins>(c.levels);
                if (nb.bins.empty()) {
                    out.push_back({cfield + ".levels", "numeric level has no bins", 0.0});
                }
                for (std::size_t i = 0; i < nb.bins.size(); ++i) {
                    const auto& b = nb.bins[i];
                    if (!(b.lo < b.hi)) {
                        out.push_back({cfield + ".levels", "empty bin [" + detail::fmt_num(b.lo) + ", " +
                                                               detail::fmt_num(b.hi) + ")",
                                       b.lo - b.hi});
                    }
                    if (i > 0 && nb.bins[i - 1].lo > b.lo) {
                        out.push_back({cfield + ".levels", "bins not sorted ascending", 0.0});
                    }
                    bins.push_back(b);
                }
            }
        }
        if (numeric != 0 && numeric != d.criteria.size()) {
            out.push_back({field + ".criteria", "dimension mixes categorical and numeric levels", 0.0});
        }
        std::sort(bins.begin(), bins.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < bins.size(); ++i) {
            if (bins[i].lo < bins[i - 1].hi) {
                out.push_back({field + ".criteria", "numeric bins overlap near " + detail::fmt_num(bins[i].lo),
                               bins[i - 1].hi - bins[i].lo});
            }
        }
        detail::check_sum(out, field + ".criteria", "criterion weights of \"" + d.name + "\"", crit_sum, tol);
        if (d.consistency_ratio && *d.consistency_ratio > kAcceptableConsistencyRatio) {
            out.push_back({field + ".judgment_matrix",
                           "consistency ratio " + detail::fmt_num(*d.consistency_ratio) + " exceeds 0.1",
                           *d.consistency_ratio - kAcceptableConsistencyRatio});
        }
    }
    detail::check_sum(out, "dimensions", "dimension weights", dim_sum, tol);
    if (model.consistency_ratio && *model.consistency_ratio > kAcceptableConsistencyRatio) {
        out.push_back({"judgment_matrix",
                       "consistency ratio " + detail::fmt_num(*model.consistency_ratio) + " exceeds 0.1",
                       *model.consistency_ratio - kAcceptableConsistencyRatio});
    }
    return out;
}

/// Uncovered stretches between consecutive numeric bins. Gaps are legal but
/// values falling in them cannot be mapped to a level.
inline std::vector<std::string> level_gaps(const DecisionModel& model) {
    std::vector<std::string> out;
    for (const auto& d : model.dimensions) {
        std::vector<Interval> bins;
        for (const auto& c : d.criteria) {
            if (const auto* nb = std::get_if<NumericBins>(&c.levels)) {
                bins.insert(bins.end(), nb->bins.begin(), nb->bins.end());
            }
        }
        std::sort(bins.begin(), bins.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < bins.size(); ++i) {
            if (bins[i].lo > bins[i - 1].hi) {
                out.push_back(d.name + ": no level covers [" + detail::fmt_num(bins[i - 1].hi) + ", " +
                              detail::fmt_num(bins[i].lo) + ")");
            }
        }
    }
    return out;
}

}  // namespace mcdm
