#pragma once

#include <stdexcept>
#include <string>

namespace expmem {

// Violated construction invariant (bad kernel coefficients, bad parameters).
struct InvariantError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed coefficient file; carries the 1-based offending line.
struct ParseError : std::runtime_error {
    int line;
    ParseError(const std::string& what, int line_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ")"), line(line_) {}
};

// Rational fit could not be repaired into an admissible exponential sum.
struct FitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Barycentric-to-partial-fraction conversion failed (defective pole problem).
struct ConversionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative solver exhausted its iteration budget.
struct NoConvergence : std::runtime_error {
    double residual;
    NoConvergence(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
};

// Discrete energy bound exceeded while the monitor was in fail mode.
struct StabilityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coupled-system mass matrix is numerically singular.
struct SingularMass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A quadratic form (Dv, v) came out negative for an operator that must be SPD.
struct NegativeQuadraticForm : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive quadrature failed to reach its tolerance on some interval.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace expmem
