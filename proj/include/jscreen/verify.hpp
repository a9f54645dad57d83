#pragma once

// Property checks against the brute-force oracles. Each check is
// deterministic in its seed and reports a one-line summary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "jscreen/harness.hpp"

namespace jscreen::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Random clustered instances; every atom screened by any procedure at any
/// iteration must vanish in the reference solution (gap <= 1e-12).
struct SafetyOptions {
    std::size_t instances = 50;
    std::size_t m = 20;
    std::size_t n = 100;
    std::size_t clusters = 10;
    std::size_t sparsity = 5;
    std::size_t lambdas = 10;
    std::size_t max_iters = 5000;
    std::uint64_t seed = 1;
};
CheckResult check_safety(const SafetyOptions& options);

/// Closed-form sphere/dome maxima against region_max_bruteforce.
struct RegionMaxOptions {
    std::size_t pairs = 1000;
    std::size_t samples = 1'000'000;
    double tolerance = 1e-3;
    std::uint64_t seed = 2;
};
CheckResult check_region_maxima(const RegionMaxOptions& options);

/// The joint tests switch exactly at eps_{t,c} and delta_{t,c}.
struct ThresholdOptions {
    std::size_t cases = 500;
    double tolerance = 1e-9;
    std::uint64_t seed = 3;
};
CheckResult check_thresholds(const ThresholdOptions& options);

/// Points of the smallest enclosing dome lie in the smallest enclosing sphere.
struct NestingOptions {
    std::size_t sets = 500;
    std::size_t samples = 100'000;
    double tolerance = 1e-9;
    std::uint64_t seed = 4;
};
CheckResult check_dome_in_sphere(const NestingOptions& options);

/// g non-increasing, strictly decreasing past A, f concave.
struct AuxFunctionOptions {
    std::size_t grid = 10'000;
    std::size_t a_values = 100;
    std::uint64_t seed = 5;
};
CheckResult check_aux_function(const AuxFunctionOptions& options);

/// Sorted-index screening against the per-atom rules.
struct IndexOptions {
    std::size_t instances = 200;
    std::uint64_t seed = 6;
};
CheckResult check_index_equivalence(const IndexOptions& options);

/// tau <= ||c|| + 1e-12 for every sphere emitted below lambda_max.
CheckResult check_radius_bound(const harness::ExperimentResult& run);

/// Joint masks inside standard masks; standard rates >= joint rates cellwise.
CheckResult check_dominance(const harness::ExperimentResult& run);

/// Exact inner-product counts per invocation, plus wall-clock of one joint
/// invocation against one standard invocation on spheres from a FISTA run.
struct ComplexityOptions {
    std::size_t spheres = 20;
    std::size_t repeats = 50;
    double max_time_ratio = 0.25;
};
CheckResult check_complexity(const harness::ExperimentConfig& config, const harness::ExperimentResult& run,
                             const ComplexityOptions& options);

/// Full-scale runs: time limit per run, well-formed CSV/SVG written to
/// out_dir, and per-cell median (over runs) of the standard detection rate
/// in late-iteration cells at moderate lambda.
struct FullScaleOptions {
    double time_limit_seconds = 600.0;
    std::size_t late_iteration = 1000;
    double ratio_low = 0.3;
    double ratio_high = 1.0;
    double min_median_rate = 0.8;
};
CheckResult check_full_scale(std::span<const harness::ExperimentResult> runs,
                              const std::filesystem::path& out_dir, const FullScaleOptions& options);

/// Minimal well-formedness check: balanced tags under a single <svg> root.
bool svg_well_formed(const std::string& text);

}  // namespace jscreen::verify
