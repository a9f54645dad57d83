#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "jscreen/core.hpp"

namespace jscreen {

/// Feasible dual point: max_i <a_i, theta> <= 1.
struct DualPoint {
    Vector theta;
};

/// Dual-space ball {theta : ||theta - center|| <= 1 - tau} containing the dual optimum.
struct SafeSphere {
    Vector center;
    double tau = 1.0;

    double radius() const noexcept { return 1.0 - tau; }
};

/// FISTA iterate. residual / correlation are kept exact (recomputed every step)
/// for both the current and previous point, so the extrapolated gradient is a
/// linear combination of cached products.
struct SolverState {
    PrimalPoint x;
    PrimalPoint x_prev;
    double momentum = 1.0;
    std::size_t iteration = 0;
    double step_size = 0.0;
    Vector residual;          // y - A x
    Vector correlation;       // A^T residual
    Vector correlation_prev;  // A^T (y - A x_prev)
};

/// Largest eigenvalue of A^T A by power iteration from the all-ones vector.
double spectral_norm_squared(const Dictionary& dictionary, int iterations = 100);

/// 1 / (1.01 * ||A||_2^2), with ||A||_2 from 100 power-iteration steps.
double default_step_size(const Dictionary& dictionary);

/// Fresh state at x0 (momentum 1, iteration 0, x_prev = x0).
SolverState make_solver_state(const Problem& problem, PrimalPoint x0, double step_size);

enum class Acceleration { fista, none };

/// One proximal-gradient step in place. The proximal map is the nonnegative
/// soft threshold max(0, v - lambda * step). Coordinates flagged in `frozen`
/// (nonzero bytes) are pinned at zero. Acceleration::none gives plain ISTA,
/// whose objective never increases for step <= 1/||A||^2.
/// Throws DivergenceError when the iterate stops being finite.
void fista_step(SolverState& state, const Problem& problem,
                Acceleration acceleration = Acceleration::fista,
                std::span<const std::uint8_t> frozen = {});

/// theta = r / max(lambda, max_i <a_i, r>) with r = y - Ax; exactly (y - Ax*)/lambda at the optimum.
DualPoint dual_feasible_point(const Problem& problem, const PrimalPoint& x);

/// Same scaling from a residual and its correlations A^T r.
DualPoint dual_from_residual(std::span<const double> residual, std::span<const double> correlation,
                             double lambda);

/// P(x) - D(theta) with rounding-level negatives (>= -1e-12) clamped to 0.
/// Throws InfeasibleDualError if theta leaves the dual set or the gap is
/// negative beyond rounding.
double duality_gap(const Problem& problem, const PrimalPoint& x, const DualPoint& theta);

/// GAP safe sphere: center theta, radius sqrt(2 gap) / lambda. The gap fed to
/// the radius is raised by a bound on its own floating-point evaluation error,
/// so a sphere computed at (numerical) optimality still has a radius a few
/// ulps of the objective wide.
SafeSphere gap_safe_sphere(const Problem& problem, const PrimalPoint& x, const DualPoint& theta);

/// Everything the per-iteration callback may look at. Only `exclusion` is writable:
/// set a byte to pin that coordinate at zero for the rest of the solve.
struct IterationView {
    const SolverState& state;
    const DualPoint& dual;
    const SafeSphere& sphere;
    double gap;
    double primal;
    std::vector<std::uint8_t>& exclusion;
};

using IterationCallback = std::function<void(IterationView&)>;

struct SolveOptions {
    double gap_tolerance = 1e-8;
    std::size_t max_iters = 10000;
    /// Warm start; zero vector when empty.
    std::optional<PrimalPoint> x0;
    /// default_step_size(dictionary) when empty.
    std::optional<double> step_size;
    /// Return a non-converged result instead of throwing ConvergenceError.
    bool allow_nonconvergence = false;
};

struct SolveResult {
    PrimalPoint x;
    DualPoint theta;
    double gap = 0.0;
    std::size_t iterations = 0;  // iterates evaluated (callback invocations)
    bool converged = false;
};

/// FISTA until the duality gap drops to gap_tolerance. The callback runs once
/// per iterate (before the step), with the GAP sphere of that iterate.
SolveResult solve(const Problem& problem, const SolveOptions& options,
                  const IterationCallback& callback = {});

/// Writes "iteration,gap,objective" rows.
class TraceWriter {
public:
    explicit TraceWriter(std::ostream& out, bool header = true);
    void row(std::size_t iteration, double gap, double objective);

private:
    std::ostream& out_;
};

}  // namespace jscreen
