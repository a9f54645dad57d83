#include "jscreen/regions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace jscreen {
namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kBoundarySlack = 1e-12;
constexpr double kCosineSlack = 1e-9;
constexpr double kDegenerateCenter = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("vector lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_unit(std::span<const double> v, const char* what) {
    if (!(std::abs(norm(v) - 1.0) <= kNormTolerance)) {
        throw DomainError(std::string(what) + " must have unit norm");
    }
}

double clamp_unit_interval(double v, double slack, const char* what) {
    if (!(v >= -1.0 - slack && v <= 1.0 + slack)) {
        throw DomainError(std::string(what) + " = " + std::to_string(v) + " outside [-1, 1]");
    }
    return std::clamp(v, -1.0, 1.0);
}

// Minimum-norm point of conv(columns) by Wolfe's method: a Frank-Wolfe outer
// step adds the most negatively correlated vertex, then minor cycles shrink the
// corral until its affine minimizer lies strictly inside the simplex.
Eigen::VectorXd min_norm_point(const Eigen::MatrixXd& p) {
    std::vector<Eigen::Index> corral;
    Eigen::VectorXd weights;

    Eigen::Index start = 0;
    p.colwise().squaredNorm().minCoeff(&start);
    corral.push_back(start);
    weights = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd x = p.col(start);

    constexpr int kMaxMajor = 10000;
    constexpr double kTol = 1e-15;
    for (int major = 0; major < kMaxMajor; ++major) {
        Eigen::Index j = 0;
        const double best = (p.transpose() * x).minCoeff(&j);
        if (x.squaredNorm() - best <= kTol) break;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;
        corral.push_back(j);
        weights.conservativeResize(weights.size() + 1);
        weights(weights.size() - 1) = 0.0;

        for (;;) {
            const auto s = static_cast<Eigen::Index>(corral.size());
            // Affine minimizer: p0 + D beta, beta = argmin ||p0 + D beta||.
            Eigen::VectorXd alpha(s);
            if (s == 1) {
                alpha(0) = 1.0;
            } else {
                Eigen::MatrixXd d(p.rows(), s - 1);
                for (Eigen::Index c = 1; c < s; ++c) d.col(c - 1) = p.col(corral[c]) - p.col(corral[0]);
                const Eigen::VectorXd beta = d.colPivHouseholderQr().solve(-p.col(corral[0]));
                alpha(0) = 1.0 - beta.sum();
                alpha.tail(s - 1) = beta;
            }
            if ((alpha.array() > 1e-14).all()) {
                weights = alpha;
                break;
            }
            double step = 1.0;
            for (Eigen::Index c = 0; c < s; ++c) {
                if (alpha(c) <= 1e-14) {
                    const double denom = weights(c) - alpha(c);
                    if (denom > 0.0) step = std::min(step, weights(c) / denom);
                }
            }
            weights = weights + step * (alpha - weights);
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_w;
            for (Eigen::Index c = 0; c < s; ++c) {
                if (weights(c) > 1e-14) {
                    kept.push_back(corral[c]);
                    kept_w.push_back(weights(c));
                }
            }
            if (kept.empty()) {  // numerical corner: keep the newest vertex
                kept.push_back(corral.back());
                kept_w.push_back(1.0);
            }
            corral = std::move(kept);
            weights = Eigen::Map<Eigen::VectorXd>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
            weights /= weights.sum();
        }
        x.setZero();
        for (std::size_t c = 0; c < corral.size(); ++c) x += weights(static_cast<Eigen::Index>(c)) * p.col(corral[c]);
    }
    return x;
}

}  // namespace

SphereRegion::SphereRegion(Vector t, double eps) : t_(std::move(t)), eps_(eps) {
    if (!(eps >= 0.0)) throw DomainError("sphere radius must be nonnegative");
}

DomeRegion::DomeRegion(Vector t, double delta) : t_(std::move(t)), delta_(delta) {
    require_unit(t_, "dome axis");
    if (!(delta >= -1.0 && delta <= 1.0)) throw DomainError("dome delta must lie in [-1, 1]");
}

UnitVectorSet::UnitVectorSet(Matrix vectors) : vectors_(std::move(vectors)) {
    if (vectors_.cols() == 0 || vectors_.rows() == 0) throw DimensionError("unit vector set is empty");
    for (std::size_t i = 0; i < vectors_.cols(); ++i) require_unit(vectors_.col(i), "set member");
}

double sphere_region_max(const SphereRegion& region, std::span<const double> c) {
    return dot(region.t(), c) + region.eps() * norm(c);
}

double concave_aux_g(double a, double xi) {
    a = clamp_unit_interval(a, kBoundarySlack, "A");
    xi = clamp_unit_interval(xi, kBoundarySlack, "xi");
    if (xi < a) return 1.0;
    return a * xi + std::sqrt(1.0 - a * a) * std::sqrt(1.0 - xi * xi);
}

double dome_region_max(const DomeRegion& region, std::span<const double> c) {
    const double tc = dot(region.t(), c);
    const double cn = norm(c);
    if (cn == 0.0) return 0.0;
    const double cosine = clamp_unit_interval(tc / cn, kCosineSlack, "<t, c> / ||c||");
    return cn * concave_aux_g(cosine, region.delta());
}

SphereRegion min_enclosing_sphere(const UnitVectorSet& set) {
    const Matrix& m = set.matrix();
    const Eigen::Map<const Eigen::MatrixXd> p(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                              static_cast<Eigen::Index>(m.cols()));
    const Eigen::VectorXd center = min_norm_point(p);
    const double radius = (p.colwise() - center).colwise().norm().maxCoeff();
    return SphereRegion(Vector(center.data(), center.data() + center.size()), radius);
}

DomeRegion min_enclosing_dome(const UnitVectorSet& set) {
    const SphereRegion sphere = min_enclosing_sphere(set);
    const double cn = norm(sphere.t());
    if (cn <= kDegenerateCenter) {
        double fallback = 1.0;
        for (std::size_t i = 0; i < set.size(); ++i) fallback = std::min(fallback, dot(set[0], set[i]));
        throw DegenerateRegionError("enclosing sphere is centred at the origin; dome axis undefined",
                                    fallback);
    }
    Vector axis(sphere.t().begin(), sphere.t().end());
    for (double& v : axis) v /= cn;
    double delta = 1.0;
    for (std::size_t i = 0; i < set.size(); ++i) delta = std::min(delta, dot(axis, set[i]));
    return DomeRegion(std::move(axis), std::clamp(delta, -1.0, 1.0));
}

}  // namespace jscreen
