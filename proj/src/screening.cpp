#include "jscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "jscreen/kernels.hpp"

namespace jscreen {
namespace {

struct CenterView {
    std::span<const double> c;
    double norm;
    double tau;
};

CenterView view_of(const SafeSphere& sphere) {
    return {sphere.center, std::sqrt(kernels::squared_norm(sphere.center)), sphere.tau};
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": length mismatch");
}

double eps_threshold_from(double tc, const CenterView& v) {
    if (v.norm == 0.0) {
        return v.tau > 0.0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
    }
    return (v.tau - tc) / v.norm;
}

// Caller has checked tc < tau <= ||c||.
double delta_threshold_from(double tc, const CenterView& v) {
    const double cn2 = v.norm * v.norm;
    const double perp = std::sqrt(std::max(0.0, cn2 - tc * tc));
    const double slack = std::sqrt(std::max(0.0, cn2 - v.tau * v.tau));
    return (tc * v.tau + perp * slack) / cn2;
}

DomeOutcome classify_dome(double tc, const CenterView& v) {
    if (v.norm == 0.0) return DomeOutcome::zero_center;
    if (!(tc < v.tau)) return DomeOutcome::gate_failed;
    if (v.tau > v.norm) return DomeOutcome::radius_exceeds_center;
    return DomeOutcome::pass;
}

void mark(std::span<const std::uint32_t> order, std::size_t count, ScreenMask& mask) {
    for (std::size_t k = 0; k < count; ++k) mask.screened[order[k]] = 1;
}

void sphere_index_step(const GroupIndex& index, const CenterView& v, ScreenMask& mask) {
    const double tc = kernels::dot(index.t(), v.c);
    ++mask.inner_product_count;
    const double eps = eps_threshold_from(tc, v);
    if (!(eps > 0.0)) return;
    const auto d = index.sorted_distances();
    // first position with distance >= eps; everything before is strictly inside
    const auto first = std::lower_bound(d.begin(), d.end(), eps);
    mark(index.distance_order(), static_cast<std::size_t>(first - d.begin()), mask);
}

void dome_index_step(const GroupIndex& index, const CenterView& v, ScreenMask& mask) {
    const double tc = kernels::dot(index.t(), v.c);
    ++mask.inner_product_count;
    const DomeOutcome outcome = classify_dome(tc, v);
    if (outcome == DomeOutcome::radius_exceeds_center) ++mask.skipped_tests;
    if (outcome != DomeOutcome::pass) return;
    const double delta = delta_threshold_from(tc, v);
    const auto s = index.sorted_inner();
    const auto end = std::partition_point(s.begin(), s.end(), [delta](double x) { return x > delta; });
    mark(index.inner_order(), static_cast<std::size_t>(end - s.begin()), mask);
}

void check_index(const GroupIndex& index, const SafeSphere& sphere, const ScreenMask& mask) {
    require_same_length(index.t().size(), sphere.center.size(), "test vector vs sphere centre");
    require_same_length(mask.size(), index.size(), "mask vs index");
}

}  // namespace

std::size_t ScreenMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(screened.begin(), screened.end(), std::uint8_t{1}));
}

ScreenMask& ScreenMask::merge(const ScreenMask& other) {
    if (other.size() != 0) {
        if (size() == 0) screened.assign(other.size(), 0);
        require_same_length(size(), other.size(), "mask merge");
        for (std::size_t i = 0; i < size(); ++i) screened[i] |= other.screened[i];
    }
    inner_product_count += other.inner_product_count;
    skipped_tests += other.skipped_tests;
    return *this;
}

bool ScreenMask::subset_of(const ScreenMask& other) const {
    if (size() == 0) return true;
    require_same_length(size(), other.size(), "mask comparison");
    for (std::size_t i = 0; i < size(); ++i) {
        if (screened[i] && !other.screened[i]) return false;
    }
    return true;
}

ScreenMask standard_screen(const Dictionary& dictionary, const SafeSphere& sphere) {
    require_same_length(sphere.center.size(), dictionary.m(), "sphere centre");
    if (!(sphere.tau <= 1.0)) throw DomainError("sphere tau must be <= 1");
    ScreenMask mask(dictionary.n());
    Vector corr(dictionary.n());
    kernels::gemv_t(dictionary.atoms(), sphere.center, corr);
    for (std::size_t i = 0; i < corr.size(); ++i) mask.screened[i] = corr[i] < sphere.tau ? 1 : 0;
    mask.inner_product_count = dictionary.n();
    return mask;
}

bool joint_sphere_test(const SphereRegion& region, const SafeSphere& sphere) {
    require_same_length(region.t().size(), sphere.center.size(), "region vs sphere");
    const CenterView v = view_of(sphere);
    return kernels::dot(region.t(), v.c) < v.tau - region.eps() * v.norm;
}

DomeOutcome dome_test_outcome(const DomeRegion& region, const SafeSphere& sphere) {
    require_same_length(region.t().size(), sphere.center.size(), "region vs sphere");
    const CenterView v = view_of(sphere);
    const double tc = kernels::dot(region.t(), v.c);
    const DomeOutcome gate = classify_dome(tc, v);
    if (gate != DomeOutcome::pass) return gate;
    return region.delta() > delta_threshold_from(tc, v) ? DomeOutcome::pass
                                                        : DomeOutcome::delta_below_threshold;
}

bool joint_dome_test(const DomeRegion& region, const SafeSphere& sphere) {
    return dome_test_outcome(region, sphere) == DomeOutcome::pass;
}

double eps_threshold(std::span<const double> t, const SafeSphere& sphere) {
    require_same_length(t.size(), sphere.center.size(), "test vector vs sphere");
    const CenterView v = view_of(sphere);
    return eps_threshold_from(kernels::dot(t, v.c), v);
}

double delta_threshold(std::span<const double> t, const SafeSphere& sphere) {
    require_same_length(t.size(), sphere.center.size(), "test vector vs sphere");
    const CenterView v = view_of(sphere);
    const double tc = kernels::dot(t, v.c);
    switch (classify_dome(tc, v)) {
        case DomeOutcome::gate_failed:
            throw ThresholdError(ThresholdError::Kind::dome_gate_failed, "<t, c> >= tau");
        case DomeOutcome::radius_exceeds_center:
        case DomeOutcome::zero_center:
            throw ThresholdError(ThresholdError::Kind::radius_exceeds_center, "tau > ||c||");
        default:
            break;
    }
    return delta_threshold_from(tc, v);
}

GroupIndex build_group_index(const Dictionary& dictionary, std::span<const double> t) {
    require_same_length(t.size(), dictionary.m(), "test vector");
    double tn = 0.0;
    for (double v : t) tn += v * v;
    if (!(std::abs(std::sqrt(tn) - 1.0) <= 1e-12)) throw DomainError("test vector must have unit norm");

    const std::size_t n = dictionary.n();
    GroupIndex index;
    index.t_.assign(t.begin(), t.end());
    index.fingerprint_ = dictionary.fingerprint();

    Vector inner(n);
    kernels::gemv_t(dictionary.atoms(), t, inner);
    Vector dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = dictionary.atom(i);
        double sq = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - t[k]) * (a[k] - t[k]);
        dist[i] = std::sqrt(sq);
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    index.distance_order_ = order;
    std::stable_sort(index.distance_order_.begin(), index.distance_order_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return dist[a] < dist[b]; });
    index.inner_order_ = std::move(order);
    std::stable_sort(index.inner_order_.begin(), index.inner_order_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return inner[a] > inner[b]; });

    index.sorted_distances_.resize(n);
    index.sorted_inner_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        index.sorted_distances_[k] = dist[index.distance_order_[k]];
        index.sorted_inner_[k] = inner[index.inner_order_[k]];
    }
    return index;
}

ScreenMask& screen_by_sphere_index(const GroupIndex& index, const SafeSphere& sphere, ScreenMask& mask) {
    check_index(index, sphere, mask);
    sphere_index_step(index, view_of(sphere), mask);
    return mask;
}

ScreenMask& screen_by_dome_index(const GroupIndex& index, const SafeSphere& sphere, ScreenMask& mask) {
    check_index(index, sphere, mask);
    dome_index_step(index, view_of(sphere), mask);
    return mask;
}

ScreenMask joint_screen_all(std::span<const GroupIndex> indices, const SafeSphere& sphere,
                            JointMode mode) {
    if (indices.empty()) return ScreenMask{};
    const std::uint64_t fp = indices.front().dictionary_fingerprint();
    const std::size_t n = indices.front().size();
    for (const GroupIndex& index : indices) {
        if (index.dictionary_fingerprint() != fp || index.size() != n) {
            throw DomainError("group indices were built from different dictionaries");
        }
        require_same_length(index.t().size(), sphere.center.size(), "test vector vs sphere");
    }
    ScreenMask mask(n);
    const CenterView v = view_of(sphere);
    for (const GroupIndex& index : indices) {
        if (mode == JointMode::sphere) sphere_index_step(index, v, mask);
        else dome_index_step(index, v, mask);
    }
    return mask;
}

ScreenMask hybrid_screen(const Dictionary& dictionary, std::span<const GroupIndex> indices,
                         const SafeSphere& sphere, JointMode mode) {
    ScreenMask mask = joint_screen_all(indices, sphere, mode);
    if (mask.size() == 0) mask.screened.assign(dictionary.n(), 0);
    require_same_length(mask.size(), dictionary.n(), "indices vs dictionary");
    if (!indices.empty() && indices.front().dictionary_fingerprint() != dictionary.fingerprint()) {
        throw DomainError("group indices were built from a different dictionary");
    }
    for (std::size_t i = 0; i < dictionary.n(); ++i) {
        if (mask.screened[i]) continue;
        if (kernels::dot(dictionary.atom(i), sphere.center) < sphere.tau) mask.screened[i] = 1;
        ++mask.inner_product_count;
    }
    return mask;
}

}  // namespace jscreen
