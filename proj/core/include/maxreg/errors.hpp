#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maxreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input or violated type invariant (bad Gram matrix, bad config).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Singular or numerically failed factorization.
class LinearAlgebraError : public Error {
public:
    using Error::Error;
};

/// A(t) is not invertible; a positive shift must be applied first.
class ShiftRequiredError : public Error {
public:
    using Error::Error;
};

/// Zero denominator with nonzero numerator in an estimate ratio.
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration hit its iteration cap.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Shift sweep exhausted without reaching the contraction target.
class NoContractionError : public Error {
public:
    /// @param measured (mu, Q-norm estimate) for every tested candidate
    NoContractionError(const std::string& what, std::vector<std::pair<double, double>> measured)
        : Error(what), measured_(std::move(measured)) {}
    const std::vector<std::pair<double, double>>& measured() const { return measured_; }

private:
    std::vector<std::pair<double, double>> measured_;
};

/// Square-root domains on both sides of a breakpoint are not uniformly equivalent.
class IncompatibleDomainsError : public Error {
public:
    IncompatibleDomainsError(const std::string& what, double breakpoint)
        : Error(what), breakpoint_(breakpoint) {}
    double breakpoint() const { return breakpoint_; }

private:
    double breakpoint_;
};

}  // namespace maxreg
