#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>

#include "jscreen/errors.hpp"
#include "jscreen/matrix.hpp"

namespace jscreen {

/// Tolerance on atom norms accepted by Dictionary.
inline constexpr double kUnitNormTolerance = 1e-12;

/// m x n matrix whose columns (atoms) all have unit Euclidean norm.
/// Immutable after construction.
class Dictionary {
public:
    /// Throws DomainError unless every column has norm 1 within kUnitNormTolerance.
    explicit Dictionary(Matrix atoms);

    std::size_t m() const noexcept { return atoms_.rows(); }
    std::size_t n() const noexcept { return atoms_.cols(); }
    const Matrix& atoms() const noexcept { return atoms_; }
    std::span<const double> atom(std::size_t i) const { return atoms_.col(i); }

    /// Content hash; identical atoms give identical fingerprints.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    Matrix atoms_;
    std::uint64_t fingerprint_;
};

struct Observation {
    Vector y;
};

/// Nonnegative LASSO instance: min_{x >= 0} 1/2 ||y - Ax||^2 + lambda ||x||_1.
/// Non-owning: the dictionary and observation must outlive the problem.
class Problem {
public:
    /// lambda must be > 0 and y must have m entries.
    Problem(const Dictionary& dictionary, const Observation& observation, double lambda);

    const Dictionary& dictionary() const noexcept { return dictionary_.get(); }
    std::span<const double> y() const noexcept { return observation_.get().y; }
    double lambda() const noexcept { return lambda_; }

    /// Same data, different regularization.
    Problem with_lambda(double lambda) const { return {dictionary_, observation_, lambda}; }

private:
    std::reference_wrapper<const Dictionary> dictionary_;
    std::reference_wrapper<const Observation> observation_;
    double lambda_;
};

struct PrimalPoint {
    Vector x;
};

/// Scales every column to unit norm. Throws ZeroColumnError naming the first zero column.
Dictionary unit_normalize(Matrix raw);

/// 1/2 ||y - Ax||^2 + lambda * sum(x). The l1 norm is the plain sum on the nonnegative orthant.
double primal_objective(const Problem& problem, const PrimalPoint& x);
/// Same, for any lambda >= 0 (lambda = 0 is the plain least-squares term).
double primal_objective(const Dictionary& dictionary, std::span<const double> y,
                        std::span<const double> x, double lambda);

/// 1/2 ||y||^2 - 1/2 ||y - lambda theta||^2, without a feasibility check.
double dual_objective(const Problem& problem, std::span<const double> theta);

/// max_i <a_i, y>. Throws NoActiveAtomError when this is <= 0, since then the
/// nonnegative solution is zero for every lambda > 0.
double lambda_max(const Dictionary& dictionary, const Observation& observation);

/// ||A^T y||_inf, defined for every y (0 when y = 0).
double lambda_max_abs(const Dictionary& dictionary, const Observation& observation);

/// y - Ax
Vector residual(const Dictionary& dictionary, std::span<const double> y, std::span<const double> x);

namespace io {

enum class MatrixFormat { csv, binary };

/// One row per matrix row, comma-separated decimals.
Matrix read_csv(const std::filesystem::path& path);
void write_csv(const Matrix& matrix, const std::filesystem::path& path);

/// Header: u64 m, u64 n (little-endian), then m*n little-endian f64 in column-major order.
Matrix read_binary(const std::filesystem::path& path);
void write_binary(const Matrix& matrix, const std::filesystem::path& path);

/// Dispatches on the ".bin" extension; everything else is CSV.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const Matrix& matrix, const std::filesystem::path& path);

/// Observation as an m x 1 matrix file.
Observation read_observation(const std::filesystem::path& path);
void write_observation(const Observation& observation, const std::filesystem::path& path);

}  // namespace io
}  // namespace jscreen
