#pragma once

#include <cstddef>
#include <span>

#include "jscreen/errors.hpp"
#include "jscreen/matrix.hpp"

namespace jscreen {

/// Ball G^s(t, eps) = {a : ||a - t|| <= eps}.
class SphereRegion {
public:
    /// Throws DomainError for eps < 0.
    SphereRegion(Vector t, double eps);

    std::span<const double> t() const noexcept { return t_; }
    double eps() const noexcept { return eps_; }

private:
    Vector t_;
    double eps_;
};

/// Dome G^d(t, delta) = {a : <a, t> >= delta, ||a|| <= 1}, with ||t|| = 1.
class DomeRegion {
public:
    /// Throws DomainError unless ||t|| = 1 (within 1e-12) and delta is in [-1, 1].
    DomeRegion(Vector t, double delta);

    std::span<const double> t() const noexcept { return t_; }
    double delta() const noexcept { return delta_; }

private:
    Vector t_;
    double delta_;
};

/// Non-empty set of unit vectors, stored as matrix columns.
class UnitVectorSet {
public:
    explicit UnitVectorSet(Matrix vectors);

    std::size_t dimension() const noexcept { return vectors_.rows(); }
    std::size_t size() const noexcept { return vectors_.cols(); }
    std::span<const double> operator[](std::size_t i) const { return vectors_.col(i); }
    const Matrix& matrix() const noexcept { return vectors_; }

private:
    Matrix vectors_;
};

/// max_{a in G^s(t, eps)} <a, c> = <t, c> + eps ||c||.
double sphere_region_max(const SphereRegion& region, std::span<const double> c);

/// g(xi) = max_{xi <= xi' <= 1} A xi' + sqrt(1 - A^2) sqrt(1 - xi'^2), i.e.
/// 1 if xi < A, else A xi + sqrt(1 - A^2) sqrt(1 - xi^2). Concave and
/// non-increasing on [-1, 1]. Inputs within 1e-12 outside [-1, 1] are clamped;
/// further out throws DomainError.
double concave_aux_g(double a, double xi);

/// max_{a in G^d(t, delta)} <a, c> = ||c|| g(<t, c> / ||c||, delta); 0 for c = 0.
double dome_region_max(const DomeRegion& region, std::span<const double> c);

/// Smallest ball containing every member. For unit vectors its centre is the
/// minimum-norm point of the convex hull, found with Wolfe's algorithm.
SphereRegion min_enclosing_sphere(const UnitVectorSet& set);

/// Smallest dome containing every member: axis = normalized enclosing-sphere
/// centre, delta = min_a <axis, a>. Throws DegenerateRegionError when the
/// enclosing sphere is centred at the origin (origin in the convex hull).
DomeRegion min_enclosing_dome(const UnitVectorSet& set);

}  // namespace jscreen
