#include "jscreen/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "jscreen/kernels.hpp"

namespace jscreen {
namespace {

constexpr double kGapClamp = 1e-12;
constexpr double kFeasibilitySlack = 1e-12;

struct GapEvaluation {
    double gap;       // P - D, unclamped
    double primal;
    double rounding;  // bound on the floating-point error of `gap`
};

GapEvaluation evaluate_gap(std::span<const double> y, std::span<const double> residual,
                           std::span<const double> x, std::span<const double> theta, double lambda) {
    double l1 = 0.0;
    for (double v : x) l1 += std::abs(v);
    double rr = 0.0;
    double yy = 0.0;
    double dd = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double d = y[k] - lambda * theta[k];
        rr += residual[k] * residual[k];
        yy += y[k] * y[k];
        dd += d * d;
    }
    const double primal = 0.5 * rr + lambda * l1;
    const double dual = 0.5 * yy - 0.5 * dd;
    const double magnitude = primal + 0.5 * yy + 0.5 * dd;
    const double rounding = static_cast<double>(y.size() + 16) *
                            std::numeric_limits<double>::epsilon() * magnitude;
    return {primal - dual, primal, rounding};
}

double clamp_gap(double gap) {
    if (gap < -kGapClamp) {
        throw InfeasibleDualError("negative duality gap " + std::to_string(gap));
    }
    return std::max(gap, 0.0);
}

SafeSphere sphere_from(const DualPoint& dual, double gap, double rounding, double lambda) {
    const double radius = std::sqrt(2.0 * (gap + rounding)) / lambda;
    return SafeSphere{dual.theta, 1.0 - radius};
}

void require_nonnegative(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0)) {
            throw DomainError("primal point has negative entry at " + std::to_string(i));
        }
    }
}

void refresh_products(SolverState& state, const Problem& problem) {
    const Dictionary& dict = problem.dictionary();
    state.residual = residual(dict, problem.y(), state.x.x);
    state.correlation.resize(dict.n());
    kernels::gemv_t(dict.atoms(), state.residual, state.correlation);
}

}  // namespace

double spectral_norm_squared(const Dictionary& dictionary, int iterations) {
    const std::size_t n = dictionary.n();
    Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vector av(dictionary.m());
    Vector atav(n);
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        std::fill(av.begin(), av.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) kernels::axpy(v[i], dictionary.atom(i), av);
        estimate = std::max(estimate, kernels::squared_norm(av));  // Rayleigh quotient, |v| = 1
        kernels::gemv_t(dictionary.atoms(), av, atav);
        const double norm = std::sqrt(kernels::squared_norm(atav));
        if (norm == 0.0) break;
        estimate = std::max(estimate, norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = atav[i] / norm;
    }
    return estimate;
}

double default_step_size(const Dictionary& dictionary) {
    return 1.0 / (1.01 * spectral_norm_squared(dictionary, 100));
}

SolverState make_solver_state(const Problem& problem, PrimalPoint x0, double step_size) {
    if (x0.x.size() != problem.dictionary().n()) throw DimensionError("initial point has wrong length");
    require_nonnegative(x0.x);
    if (!(step_size > 0.0)) throw DomainError("step size must be positive");
    SolverState state;
    state.x = std::move(x0);
    state.x_prev = state.x;
    state.step_size = step_size;
    refresh_products(state, problem);
    state.correlation_prev = state.correlation;
    return state;
}

void fista_step(SolverState& state, const Problem& problem, Acceleration acceleration,
                std::span<const std::uint8_t> frozen) {
    const std::size_t n = problem.dictionary().n();
    if (state.x.x.size() != n) throw DimensionError("solver state does not match problem");
    if (!frozen.empty() && frozen.size() != n) throw DimensionError("frozen mask has wrong length");

    const bool accelerate = acceleration == Acceleration::fista;
    const double t = state.momentum;
    const double t_next = accelerate ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)) : 1.0;
    const double beta = accelerate ? (t - 1.0) / t_next : 0.0;
    const double step = state.step_size;
    const double threshold = problem.lambda() * step;

    Vector next(n);
    const auto& x = state.x.x;
    const auto& xp = state.x_prev.x;
    for (std::size_t i = 0; i < n; ++i) {
        if (!frozen.empty() && frozen[i]) {
            next[i] = 0.0;
            continue;
        }
        const double z = x[i] + beta * (x[i] - xp[i]);
        // A^T (y - A z), linear in the cached products of x and x_prev
        const double corr_z = (1.0 + beta) * state.correlation[i] - beta * state.correlation_prev[i];
        next[i] = std::max(0.0, z + step * corr_z - threshold);
    }

    state.x_prev.x = std::move(state.x.x);
    state.x.x = std::move(next);
    state.correlation_prev = std::move(state.correlation);
    refresh_products(state, problem);
    state.momentum = t_next;
    ++state.iteration;

    double probe = 0.0;
    for (double v : state.correlation) probe += v;
    for (double v : state.residual) probe += v;
    if (!std::isfinite(probe)) {
        throw DivergenceError("non-finite iterate at step " + std::to_string(state.iteration) +
                              "; step size too large");
    }
}

DualPoint dual_from_residual(std::span<const double> residual, std::span<const double> correlation,
                             double lambda) {
    double best = -std::numeric_limits<double>::infinity();
    for (double c : correlation) best = std::max(best, c);
    const double scale = std::max(lambda, best);
    DualPoint out{Vector(residual.size())};
    for (std::size_t k = 0; k < residual.size(); ++k) out.theta[k] = residual[k] / scale;
    return out;
}

DualPoint dual_feasible_point(const Problem& problem, const PrimalPoint& x) {
    const Dictionary& dict = problem.dictionary();
    const Vector r = residual(dict, problem.y(), x.x);
    Vector corr(dict.n());
    kernels::gemv_t(dict.atoms(), r, corr);
    return dual_from_residual(r, corr, problem.lambda());
}

double duality_gap(const Problem& problem, const PrimalPoint& x, const DualPoint& theta) {
    const Dictionary& dict = problem.dictionary();
    if (theta.theta.size() != dict.m()) throw DimensionError("theta has wrong length");
    Vector corr(dict.n());
    kernels::gemv_t(dict.atoms(), theta.theta, corr);
    const double worst = *std::max_element(corr.begin(), corr.end());
    if (worst > 1.0 + kFeasibilitySlack) {
        throw InfeasibleDualError("max_i <a_i, theta> = " + std::to_string(worst) + " > 1");
    }
    const Vector r = residual(dict, problem.y(), x.x);
    return clamp_gap(evaluate_gap(problem.y(), r, x.x, theta.theta, problem.lambda()).gap);
}

SafeSphere gap_safe_sphere(const Problem& problem, const PrimalPoint& x, const DualPoint& theta) {
    const double gap = duality_gap(problem, x, theta);
    const Vector r = residual(problem.dictionary(), problem.y(), x.x);
    const double rounding =
        evaluate_gap(problem.y(), r, x.x, theta.theta, problem.lambda()).rounding;
    return sphere_from(theta, gap, rounding, problem.lambda());
}

SolveResult solve(const Problem& problem, const SolveOptions& options,
                  const IterationCallback& callback) {
    if (!(options.gap_tolerance > 0.0)) throw DomainError("gap tolerance must be positive");
    if (options.max_iters == 0) throw DomainError("max_iters must be positive");
    const Dictionary& dict = problem.dictionary();
    const double step = options.step_size ? *options.step_size : default_step_size(dict);
    PrimalPoint x0 = options.x0 ? *options.x0 : PrimalPoint{Vector(dict.n(), 0.0)};

    SolverState state = make_solver_state(problem, std::move(x0), step);
    std::vector<std::uint8_t> exclusion(dict.n(), 0);
    const double lambda = problem.lambda();

    SolveResult result;
    for (;;) {
        DualPoint dual = dual_from_residual(state.residual, state.correlation, lambda);
        const GapEvaluation eval = evaluate_gap(problem.y(), state.residual, state.x.x, dual.theta, lambda);
        const double gap = clamp_gap(eval.gap);
        const SafeSphere sphere = sphere_from(dual, gap, eval.rounding, lambda);
        if (callback) {
            IterationView view{state, dual, sphere, gap, eval.primal, exclusion};
            callback(view);
        }
        result.gap = gap;
        result.iterations = state.iteration + 1;
        if (gap <= options.gap_tolerance) {
            result.converged = true;
            result.theta = std::move(dual);
            break;
        }
        if (result.iterations >= options.max_iters) {
            result.theta = std::move(dual);
            break;
        }
        fista_step(state, problem, Acceleration::fista, exclusion);
    }
    result.x = std::move(state.x);
    if (!result.converged && !options.allow_nonconvergence) {
        throw ConvergenceError(result.iterations, result.gap);
    }
    return result;
}

TraceWriter::TraceWriter(std::ostream& out, bool header) : out_(out) {
    if (header) out_ << "iteration,gap,objective\n";
}

void TraceWriter::row(std::size_t iteration, double gap, double objective) {
    char buf[64];
    out_ << iteration << ',';
    out_.write(buf, std::to_chars(buf, buf + sizeof buf, gap).ptr - buf);
    out_ << ',';
    out_.write(buf, std::to_chars(buf, buf + sizeof buf, objective).ptr - buf);
    out_ << '\n';
}

}  // namespace jscreen
