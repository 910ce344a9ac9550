#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mcdm/error.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

/// Ordered rubric, best grade first, each label anchored to a numeric value
/// used for defuzzification. Values are strictly decreasing.
class GradeSet {
public:
    GradeSet() = default;

    GradeSet(std::vector<std::string> labels, std::vector<double> values)
        : labels_(std::move(labels)), values_(std::move(values)) {
        check();
    }

    /// Equally spaced descending anchors: n, n-1, ..., 1.
    explicit GradeSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
        const auto n = labels_.size();
        for (std::size_t i = 0; i < n; ++i) values_.push_back(static_cast<double>(n - i));
        check();
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    double value(std::size_t i) const { return values_.at(i); }

    /// Index of a label after trim + case-fold, if any.
    std::optional<std::size_t> find(std::string_view label) const {
        const auto key = text::normalize(label);
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (text::normalize(labels_[i]) == key) return i;
        }
        return std::nullopt;
    }

    std::size_t index_of(std::string_view label) const {
        if (auto i = find(label)) return *i;
        throw Error(ErrorKind::UnknownLabel, "\"" + std::string(label) + "\" is not a grade in {" +
                                                 text::join(labels_, ", ") + "}");
    }

    /// Canonical spelling of a label (e.g. "  good " -> "Good").
    const std::string& canonical(std::string_view label) const { return labels_[index_of(label)]; }

    friend bool operator==(const GradeSet&, const GradeSet&) = default;

private:
    void check() const {
        if (labels_.size() < 2) {
            throw Error(ErrorKind::InvalidArgument, "a grade set needs at least two grades");
        }
        if (labels_.size() != values_.size()) {
            throw Error(ErrorKind::DimensionMismatch, "grade labels and values differ in length");
        }
        std::set<std::string> seen;
        for (const auto& l : labels_) {
            if (!seen.insert(text::normalize(l)).second) {
                throw Error(ErrorKind::InvalidArgument, "duplicate grade label \"" + l + "\"");
            }
        }
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (!(values_[i] < values_[i - 1])) {
                throw Error(ErrorKind::InvalidArgument, "grade values must be strictly decreasing");
            }
        }
    }

    std::vector<std::string> labels_;
    std::vector<double> values_;
};

}  // namespace mcdm
