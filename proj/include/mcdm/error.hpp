#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mcdm {

enum class ErrorKind {
    InvalidArgument,
    NonConvergence,
    UnsupportedOrder,
    DimensionMismatch,
    MissingRating,
    MissingColumn,
    ParseError,
    EmptyFile,
    UnmappableLevel,
    UnknownLabel,
    ExemplarLeak,
    InsufficientExamples,
    Transport,
    Timeout,
    AuthFailure,
    Unparseable,
    Ambiguous,
    DivergenceDetected,
    ShapeMismatch,
    UnknownTruthLabel,
    LabelSetMismatch,
    Io,
    Config,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::MissingRating: return "MissingRating";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::EmptyFile: return "EmptyFile";
        case ErrorKind::UnmappableLevel: return "UnmappableLevel";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::ExemplarLeak: return "ExemplarLeak";
        case ErrorKind::InsufficientExamples: return "InsufficientExamples";
        case ErrorKind::Transport: return "Transport";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::AuthFailure: return "AuthFailure";
        case ErrorKind::Unparseable: return "Unparseable";
        case ErrorKind::Ambiguous: return "Ambiguous";
        case ErrorKind::DivergenceDetected: return "DivergenceDetected";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::UnknownTruthLabel: return "UnknownTruthLabel";
        case ErrorKind::LabelSetMismatch: return "LabelSetMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Base exception for every failure raised by the library. The kind is
/// stable and intended for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(std::vector<double> last_iterate, double residual, int iterations)
        : Error(ErrorKind::NonConvergence,
                "power iteration did not converge after " + std::to_string(iterations) +
                    " iterations (residual " + std::to_string(residual) + ")"),
          last_iterate_(std::move(last_iterate)),
          residual_(residual),
          iterations_(iterations) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    std::vector<double> last_iterate_;
    double residual_;
    int iterations_;
};

class MissingColumnError : public Error {
public:
    explicit MissingColumnError(std::string column)
        : Error(ErrorKind::MissingColumn, "missing column \"" + column + "\""),
          column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, std::string column, const std::string& detail)
        : Error(ErrorKind::ParseError, "row " + std::to_string(row) + ", column \"" + column +
                                           "\": " + detail),
          row_(row),
          column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

/// Failure of a single judge invocation. Carries enough context to attribute
/// the failure to a (backend, problem) pair in logs.
class JudgeError : public Error {
public:
    JudgeError(ErrorKind kind, std::string backend_id, long problem_id, const std::string& detail)
        : Error(kind, "backend \"" + backend_id + "\", problem " + std::to_string(problem_id) +
                          ": " + detail),
          backend_id_(std::move(backend_id)),
          problem_id_(problem_id) {}

    const std::string& backend_id() const noexcept { return backend_id_; }
    long problem_id() const noexcept { return problem_id_; }

private:
    std::string backend_id_;
    long problem_id_;
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(int step)
        : Error(ErrorKind::DivergenceDetected,
                "loss became non-finite at step " + std::to_string(step)),
          step_(step) {}

    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace mcdm
