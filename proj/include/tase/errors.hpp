#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tase {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand sizes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the documented domain (bad order, negative step, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Registry lookup for a name that does not exist.
class UnknownNameError : public Error {
public:
    using Error::Error;
};

/// LU factorization met a pivot below the singularity threshold.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(std::size_t pivot_index, double pivot_magnitude)
        : Error("matrix is singular to working precision at pivot " +
                std::to_string(pivot_index) + " (|pivot| = " +
                std::to_string(pivot_magnitude) + ")"),
          pivot_index_(pivot_index), pivot_magnitude_(pivot_magnitude) {}

    std::size_t pivot_index() const noexcept { return pivot_index_; }
    double pivot_magnitude() const noexcept { return pivot_magnitude_; }

private:
    std::size_t pivot_index_;
    double pivot_magnitude_;
};

/// Evaluation too close to a pole of a shifted resolvent, z = 2^k / alpha.
class PoleError : public Error {
public:
    using Error::Error;
};

/// A stage produced NaN or Inf.
class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t stage)
        : Error("non-finite value in Runge-Kutta stage " + std::to_string(stage)),
          stage_(stage) {}

    std::size_t stage() const noexcept { return stage_; }

private:
    std::size_t stage_;
};

/// Newton iteration of an implicit stage did not reach its tolerance.
class NewtonError : public Error {
public:
    NewtonError(std::size_t stage, std::vector<double> residuals)
        : Error("Newton iteration did not converge in stage " + std::to_string(stage) +
                " after " + std::to_string(residuals.size()) + " residual evaluations"),
          stage_(stage), residuals_(std::move(residuals)) {}

    std::size_t stage() const noexcept { return stage_; }
    const std::vector<double>& residual_history() const noexcept { return residuals_; }

private:
    std::size_t stage_;
    std::vector<double> residuals_;
};

/// Inconsistent plan/system/configuration combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace tase
