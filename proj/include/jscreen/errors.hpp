#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jscreen {

/// Operand sizes disagree (matrix rows vs vector length, etc).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A column that cannot be unit-normalized.
class ZeroColumnError : public std::invalid_argument {
public:
    explicit ZeroColumnError(std::size_t column)
        : std::invalid_argument("column " + std::to_string(column) + " is the zero vector"),
          column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// max_i <a_i, y> <= 0: the nonnegative solution is zero for every lambda > 0.
class NoActiveAtomError : public std::domain_error {
public:
    explicit NoActiveAtomError(double max_correlation)
        : std::domain_error("max_i <a_i, y> = " + std::to_string(max_correlation) +
                            " <= 0; the solution is zero for every lambda"),
          max_correlation_(max_correlation) {}
    double max_correlation() const noexcept { return max_correlation_; }

private:
    double max_correlation_;
};

/// Iterates became non-finite; the step size is too large for the operator norm.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iteration budget exhausted before the duality gap reached its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::size_t iterations, double final_gap)
        : std::runtime_error("no convergence after " + std::to_string(iterations) +
                             " iterations (gap " + std::to_string(final_gap) + ")"),
          iterations_(iterations), final_gap_(final_gap) {}
    std::size_t iterations() const noexcept { return iterations_; }
    double final_gap() const noexcept { return final_gap_; }

private:
    std::size_t iterations_;
    double final_gap_;
};

/// A dual point outside D = {theta : <a_i, theta> <= 1}, or a gap that is
/// negative beyond rounding.
class InfeasibleDualError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Scalar argument outside its admissible domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Minimal enclosing dome is undefined: the enclosing sphere is centred at the origin.
class DegenerateRegionError : public std::domain_error {
public:
    DegenerateRegionError(const std::string& what, double min_inner_product)
        : std::domain_error(what), min_inner_product_(min_inner_product) {}
    /// Smallest inner product between the fallback axis and the set members.
    double min_inner_product() const noexcept { return min_inner_product_; }

private:
    double min_inner_product_;
};

/// Preconditions of the dome threshold, kept distinct so callers can tell them apart.
class ThresholdError : public std::domain_error {
public:
    enum class Kind {
        dome_gate_failed,       // <t, c> >= tau
        radius_exceeds_center,  // tau > ||c||, sphere is not of the safe kind
    };
    ThresholdError(Kind kind, const std::string& what) : std::domain_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace jscreen
