#pragma once

// Brute-force references for tests and verification. Nothing here goes
// through the dispatch kernels or the FISTA solver.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "jscreen/core.hpp"
#include "jscreen/regions.hpp"
#include "jscreen/screening.hpp"
#include "jscreen/solver.hpp"

namespace jscreen::oracle {

struct OracleConfig {
    std::size_t sample_count = 1'000'000;
    std::uint64_t seed = 0;
    double tolerance = 1e-3;
};

/// Largest <a, c> over sampled points a of the region. Three quarters of the
/// budget is uniform boundary sampling, the rest a shrinking random local
/// search around the incumbent. Every evaluated point lies in the region, so
/// the result never exceeds the true maximum (up to rounding). Practical for
/// m <= 10.
double region_max_bruteforce(const SphereRegion& region, std::span<const double> c,
                             const OracleConfig& config);
double region_max_bruteforce(const DomeRegion& region, std::span<const double> c,
                             const OracleConfig& config);

struct ReferenceSolution {
    PrimalPoint x;
    double gap = 0.0;
    std::size_t sweeps = 0;
};

/// Cyclic coordinate descent with active-set sweeps until the duality gap,
/// evaluated as sum_i x_i (lambda - kappa <a_i, r>) + (1 - kappa)^2 ||r||^2 / 2
/// with kappa = lambda / max(lambda, max_i <a_i, r>), is <= tolerance.
/// Throws ConvergenceError after 10^6 sweeps.
ReferenceSolution reference_solve(const Problem& problem, double tolerance,
                                  const std::optional<PrimalPoint>& warm_start = std::nullopt);

/// Naive per-atom evaluation of <a_i, c> < tau.
ScreenMask exhaustive_standard_screen(const Dictionary& dictionary, const SafeSphere& sphere);

}  // namespace jscreen::oracle
