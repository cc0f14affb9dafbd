#pragma once

#include <stdexcept>
#include <string>

namespace pathlab {

enum class ErrorKind {
    InvalidArgument,
    IntegerOverflow,
    NotUnimodular,
    NonRealSpectrum,
    DegenerateSpectrum,
    SupportTooLarge,
    LatticePointInSupport,
    NonSimpleTopEigenvalue,
    NoGap,
    IllConditionedIntersection,
    DegenerateFrame,
    BadRadius,
    BadFrame,
    BudgetExceeded,
};

const char* to_string(ErrorKind kind);

/// Numerical failure with a machine-readable kind.
class NumericalError : public std::runtime_error {
public:
    NumericalError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Configuration or schema problem. `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IntegerOverflow: return "IntegerOverflow";
    case ErrorKind::NotUnimodular: return "NotUnimodular";
    case ErrorKind::NonRealSpectrum: return "NonRealSpectrum";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::SupportTooLarge: return "SupportTooLarge";
    case ErrorKind::LatticePointInSupport: return "LatticePointInSupport";
    case ErrorKind::NonSimpleTopEigenvalue: return "NonSimpleTopEigenvalue";
    case ErrorKind::NoGap: return "NoGap";
    case ErrorKind::IllConditionedIntersection: return "IllConditionedIntersection";
    case ErrorKind::DegenerateFrame: return "DegenerateFrame";
    case ErrorKind::BadRadius: return "BadRadius";
    case ErrorKind::BadFrame: return "BadFrame";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    }
    return "Unknown";
}

} // namespace pathlab
