#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcdm/error.hpp"
#include "mcdm/grades.hpp"
#include "mcdm/hierarchy.hpp"
#include "mcdm/matrix.hpp"

namespace mcdm {

/// m factors x n grades membership matrix; each row is a distribution.
class FuzzyRatingMatrix {
public:
    explicit FuzzyRatingMatrix(Matrix rows) : r_(std::move(rows)) {
        for (std::size_t i = 0; i < r_.rows(); ++i) {
            double sum = 0.0;
            for (double v : r_.row(i)) {
                if (!(v >= -kWeightSumTolerance && v <= 1.0 + kWeightSumTolerance)) {
                    throw Error(ErrorKind::InvalidArgument, "membership entries must lie in [0, 1]");
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kWeightSumTolerance) {
                throw Error(ErrorKind::InvalidArgument,
                            "membership row " + std::to_string(i) + " sums to " + detail::fmt_num(sum));
            }
        }
    }

    static FuzzyRatingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        return FuzzyRatingMatrix(Matrix::from_rows(rows));
    }

    std::size_t factors() const noexcept { return r_.rows(); }
    std::size_t grades() const noexcept { return r_.cols(); }
    double operator()(std::size_t i, std::size_t j) const { return r_(i, j); }
    std::span<const double> row(std::size_t i) const { return r_.row(i); }

private:
    Matrix r_;
};

enum class SynthesisOperator { WeightedAverage, MinMax, ProductMax };

inline std::string_view to_string(SynthesisOperator op) {
    switch (op) {
        case SynthesisOperator::WeightedAverage: return "weighted-average";
        case SynthesisOperator::MinMax: return "min-max";
        case SynthesisOperator::ProductMax: return "product-max";
    }
    return "?";
}

struct FuzzyVerdict {
    WeightVector membership;
    double score = 0.0;
    std::string grade;
};

/// Composes factor weights with the rating matrix. Weighted average is
/// row-stochastic already; the max-based operators are L1-renormalized.
inline WeightVector synthesize(const WeightVector& w, const FuzzyRatingMatrix& r,
                               SynthesisOperator op = SynthesisOperator::WeightedAverage) {
    if (w.size() != r.factors()) {
        throw Error(ErrorKind::DimensionMismatch, "weight vector has " + std::to_string(w.size()) +
                                                      " entries but rating matrix has " +
                                                      std::to_string(r.factors()) + " rows");
    }
    std::vector<double> b(r.grades(), 0.0);
    for (std::size_t j = 0; j < r.grades(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < r.factors(); ++i) {
            switch (op) {
                case SynthesisOperator::WeightedAverage: acc += w[i] * r(i, j); break;
                case SynthesisOperator::MinMax: acc = std::max(acc, std::min(w[i], r(i, j))); break;
                case SynthesisOperator::ProductMax: acc = std::max(acc, w[i] * r(i, j)); break;
            }
        }
        b[j] = acc;
    }
    if (op == SynthesisOperator::WeightedAverage) return WeightVector::checked(std::move(b));
    return WeightVector::normalized(std::move(b));
}

/// Score = sum_j membership_j * value_j.
inline double defuzzify(const WeightVector& membership, const GradeSet& grades) {
    if (membership.size() != grades.size()) {
        throw Error(ErrorKind::DimensionMismatch, "membership has " + std::to_string(membership.size()) +
                                                      " entries for " + std::to_string(grades.size()) +
                                                      " grades");
    }
    double score = 0.0;
    for (std::size_t j = 0; j < grades.size(); ++j) score += membership[j] * grades.value(j);
    return score;
}

/// Label whose anchor value is nearest to the score; ties go to the better
/// (earlier) grade.
inline const std::string& grade_of(double score, const GradeSet& grades) {
    std::size_t best = 0;
    double best_dist = std::abs(score - grades.value(0));
    for (std::size_t j = 1; j < grades.size(); ++j) {
        const double d = std::abs(score - grades.value(j));
        if (d < best_dist) {
            best = j;
            best_dist = d;
        }
    }
    return grades.label(best);
}

using FactorKey = std::pair<std::string, std::string>;  // (dimension, criterion)
using FactorRatings = std::map<FactorKey, std::vector<double>>;

/// Two-level FCE: criteria rows -> dimension rows -> overall membership,
/// then defuzzified and graded. Weights at each level are L1-normalized, which
/// is a no-op for exact models and absorbs rounding in published ones.
inline FuzzyVerdict evaluate_hierarchical(const DecisionModel& model, const FactorRatings& ratings,
                                          SynthesisOperator op = SynthesisOperator::WeightedAverage) {
    const auto g = model.grades.size();
    Matrix dim_rows(model.dimensions.size(), g);
    std::vector<double> dim_weights;
    dim_weights.reserve(model.dimensions.size());

    for (std::size_t d = 0; d < model.dimensions.size(); ++d) {
        const auto& dim = model.dimensions[d];
        Matrix rows(dim.criteria.size(), g);
        std::vector<double> crit_weights;
        for (std::size_t c = 0; c < dim.criteria.size(); ++c) {
            const auto it = ratings.find({dim.name, dim.criteria[c].name});
            if (it == ratings.end()) {
                throw Error(ErrorKind::MissingRating,
                            "no membership row for (" + dim.name + ", " + dim.criteria[c].name + ")");
            }
            if (it->second.size() != g) {
                throw Error(ErrorKind::DimensionMismatch,
                            "membership row for (" + dim.name + ", " + dim.criteria[c].name + ") has " +
                                std::to_string(it->second.size()) + " entries for " + std::to_string(g) +
                                " grades");
            }
            std::copy(it->second.begin(), it->second.end(), rows.row(c).begin());
            crit_weights.push_back(dim.criteria[c].weight);
        }
        const auto b = synthesize(WeightVector::normalized(std::move(crit_weights)),
                                  FuzzyRatingMatrix(std::move(rows)), op);
        std::copy(b.begin(), b.end(), dim_rows.row(d).begin());
        dim_weights.push_back(dim.weight);
    }

    auto membership = synthesize(WeightVector::normalized(std::move(dim_weights)),
                                 FuzzyRatingMatrix(std::move(dim_rows)), op);
    const double score = defuzzify(membership, model.grades);
    return {std::move(membership), score, grade_of(score, model.grades)};
}

inline std::vector<double> one_hot(std::size_t n, std::size_t hot) {
    std::vector<double> v(n, 0.0);
    v.at(hot) = 1.0;
    return v;
}

}  // namespace mcdm
