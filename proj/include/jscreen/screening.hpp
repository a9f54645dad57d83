#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jscreen/core.hpp"
#include "jscreen/regions.hpp"
#include "jscreen/solver.hpp"

namespace jscreen {

/// Atoms proven to vanish at the optimum, plus instrumentation.
struct ScreenMask {
    std::vector<std::uint8_t> screened;
    /// Inner products between the sphere centre and a dictionary atom or test vector.
    std::uint64_t inner_product_count = 0;
    /// Dome tests skipped because tau > ||c|| (sphere not of the safe kind).
    std::uint64_t skipped_tests = 0;

    ScreenMask() = default;
    explicit ScreenMask(std::size_t n) : screened(n, 0) {}

    std::size_t size() const noexcept { return screened.size(); }
    bool operator[](std::size_t i) const { return screened[i] != 0; }
    std::size_t count() const noexcept;

    /// Union; counters add. A size-0 mask is the identity.
    ScreenMask& merge(const ScreenMask& other);
    bool subset_of(const ScreenMask& other) const;
};

/// screened[i] = <a_i, c> < tau. Costs n inner products.
ScreenMask standard_screen(const Dictionary& dictionary, const SafeSphere& sphere);

/// <t, c> < tau - eps ||c||: every atom in G^s(t, eps) is screened at once.
bool joint_sphere_test(const SphereRegion& region, const SafeSphere& sphere);

enum class DomeOutcome {
    pass,
    gate_failed,            // <t, c> >= tau
    delta_below_threshold,  // delta <= delta_{t,c}
    radius_exceeds_center,  // tau > ||c||
    zero_center,
};

DomeOutcome dome_test_outcome(const DomeRegion& region, const SafeSphere& sphere);

/// <t, c> < tau and delta > delta_{t,c}. False whenever tau > ||c||.
bool joint_dome_test(const DomeRegion& region, const SafeSphere& sphere);

/// eps_{t,c} = (tau - <t, c>) / ||c||, the largest radius passing the joint
/// sphere test. For c = 0 returns +inf when tau > 0, -inf otherwise.
double eps_threshold(std::span<const double> t, const SafeSphere& sphere);

/// delta_{t,c} = [<t,c> tau + sqrt(||c||^2 - <t,c>^2) sqrt(||c||^2 - tau^2)] / ||c||^2.
/// Throws ThresholdError (dome_gate_failed or radius_exceeds_center).
double delta_threshold(std::span<const double> t, const SafeSphere& sphere);

/// Per test vector t: atoms sorted by ||a_i - t|| ascending and by <t, a_i>
/// descending, ties broken by atom index.
class GroupIndex {
public:
    std::span<const double> t() const noexcept { return t_; }
    std::size_t size() const noexcept { return distance_order_.size(); }
    std::span<const double> sorted_distances() const noexcept { return sorted_distances_; }
    std::span<const std::uint32_t> distance_order() const noexcept { return distance_order_; }
    std::span<const double> sorted_inner() const noexcept { return sorted_inner_; }
    std::span<const std::uint32_t> inner_order() const noexcept { return inner_order_; }
    std::uint64_t dictionary_fingerprint() const noexcept { return fingerprint_; }

private:
    friend GroupIndex build_group_index(const Dictionary&, std::span<const double>);
    Vector t_;
    Vector sorted_distances_;
    std::vector<std::uint32_t> distance_order_;
    Vector sorted_inner_;
    std::vector<std::uint32_t> inner_order_;
    std::uint64_t fingerprint_ = 0;
};

/// Requires ||t|| = 1.
GroupIndex build_group_index(const Dictionary& dictionary, std::span<const double> t);

/// Marks every atom with ||a_i - t|| < eps_{t,c}. One inner product plus a
/// binary search.
ScreenMask& screen_by_sphere_index(const GroupIndex& index, const SafeSphere& sphere, ScreenMask& mask);

/// Marks every atom with <t, a_i> > delta_{t,c} provided <t, c> < tau and
/// tau <= ||c||; otherwise leaves the mask alone. One inner product plus a
/// binary search.
ScreenMask& screen_by_dome_index(const GroupIndex& index, const SafeSphere& sphere, ScreenMask& mask);

enum class JointMode { sphere, dome };

/// Union of the per-index masks; exactly L = indices.size() inner products.
/// All indices must come from the same dictionary. L = 0 gives a size-0 mask.
ScreenMask joint_screen_all(std::span<const GroupIndex> indices, const SafeSphere& sphere,
                            JointMode mode);

/// Joint screening, then the standard test on the atoms it left: L + survivors inner products.
ScreenMask hybrid_screen(const Dictionary& dictionary, std::span<const GroupIndex> indices,
                         const SafeSphere& sphere, JointMode mode);

}  // namespace jscreen
