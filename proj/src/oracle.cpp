#include "jscreen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace jscreen::oracle {
namespace {

double plain_dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void random_direction(std::mt19937_64& rng, std::normal_distribution<double>& normal, Vector& u) {
    for (;;) {
        for (double& v : u) v = normal(rng);
        const double n = std::sqrt(plain_dot(u, u));
        if (n > 1e-300) {
            for (double& v : u) v /= n;
            return;
        }
    }
}

// Unit vector orthogonal to t (t unit), or zero when m == 1.
void orthogonal_direction(std::mt19937_64& rng, std::normal_distribution<double>& normal,
                          std::span<const double> t, Vector& u) {
    const std::size_t m = t.size();
    if (m < 2) {
        std::fill(u.begin(), u.end(), 0.0);
        return;
    }
    for (;;) {
        for (double& v : u) v = normal(rng);
        const double proj = plain_dot(u, t);
        for (std::size_t k = 0; k < m; ++k) u[k] -= proj * t[k];
        const double n = std::sqrt(plain_dot(u, u));
        if (n > 1e-12) {
            for (double& v : u) v /= n;
            return;
        }
    }
}

void perturb_direction(std::mt19937_64& rng, std::normal_distribution<double>& normal,
                       std::span<const double> u, double sigma, Vector& out) {
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = u[k] + sigma * normal(rng);
    const double n = std::sqrt(plain_dot(out, out));
    for (double& v : out) v /= n;
}

struct Budget {
    std::size_t global;
    std::size_t local;
};

Budget split(std::size_t total) {
    const std::size_t global = std::max<std::size_t>(1, total - total / 4);
    return {global, total > global ? total - global : 0};
}

// Adapts the local-search step: halves after a run of failures.
struct StepSchedule {
    double sigma = 0.5;
    int failures = 0;
    void success() { failures = 0; }
    void failure() {
        if (++failures >= 30) {
            sigma = std::max(sigma * 0.5, 1e-12);
            failures = 0;
        }
    }
};

}  // namespace

double region_max_bruteforce(const SphereRegion& region, std::span<const double> c,
                             const OracleConfig& config) {
    const auto t = region.t();
    if (t.size() != c.size()) throw DimensionError("region vs c");
    const std::size_t m = t.size();
    std::mt19937_64 rng(config.seed);
    Vector point(m);
    auto evaluate = [&](std::span<const double> u) {
        for (std::size_t k = 0; k < m; ++k) point[k] = t[k] + region.eps() * u[k];
        return plain_dot(point, c);
    };

    std::normal_distribution<double> normal;
    const Budget budget = split(config.sample_count);
    Vector best_u(m);
    Vector u(m);
    random_direction(rng, normal, best_u);
    double best = evaluate(best_u);
    for (std::size_t s = 1; s < budget.global; ++s) {
        random_direction(rng, normal, u);
        const double v = evaluate(u);
        if (v > best) {
            best = v;
            std::swap(best_u, u);
        }
    }
    StepSchedule schedule;
    for (std::size_t s = 0; s < budget.local; ++s) {
        perturb_direction(rng, normal, best_u, schedule.sigma, u);
        const double v = evaluate(u);
        if (v > best) {
            best = v;
            std::swap(best_u, u);
            schedule.success();
        } else {
            schedule.failure();
        }
    }
    return best;
}

double region_max_bruteforce(const DomeRegion& region, std::span<const double> c,
                             const OracleConfig& config) {
    const auto t = region.t();
    if (t.size() != c.size()) throw DimensionError("region vs c");
    const std::size_t m = t.size();
    const double delta = region.delta();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;

    // a = alpha t + sqrt(1 - alpha^2) rho u, u unit in span(t)^perp:
    // rho = 1 is the spherical cap, alpha = delta the flat disc.
    struct Param {
        double alpha;
        double rho;
        Vector u;
    };
    Vector point(m);
    auto evaluate = [&](const Param& p) {
        const double lateral = std::sqrt(std::max(0.0, 1.0 - p.alpha * p.alpha)) * p.rho;
        for (std::size_t k = 0; k < m; ++k) point[k] = p.alpha * t[k] + lateral * p.u[k];
        return plain_dot(point, c);
    };
    const double disc_exponent = m > 1 ? 1.0 / static_cast<double>(m - 1) : 1.0;
    auto draw = [&](std::size_t s, Param& p) {
        if (s % 2 == 0) {
            p.alpha = delta + (1.0 - delta) * unit(rng);
            p.rho = 1.0;
        } else {
            p.alpha = delta;
            p.rho = std::pow(unit(rng), disc_exponent);
        }
        orthogonal_direction(rng, normal, t, p.u);
    };

    const Budget budget = split(config.sample_count);
    Param best_p{0.0, 0.0, Vector(m)};
    Param p{0.0, 0.0, Vector(m)};
    draw(0, best_p);
    double best = evaluate(best_p);
    for (std::size_t s = 1; s < budget.global; ++s) {
        draw(s, p);
        const double v = evaluate(p);
        if (v > best) {
            best = v;
            std::swap(best_p, p);
        }
    }
    StepSchedule schedule;
    for (std::size_t s = 0; s < budget.local; ++s) {
        p.alpha = std::clamp(best_p.alpha + schedule.sigma * normal(rng), delta, 1.0);
        p.rho = std::clamp(best_p.rho + schedule.sigma * normal(rng), 0.0, 1.0);
        if (m < 2) {
            p.u = best_p.u;
        } else {
            perturb_direction(rng, normal, best_p.u, schedule.sigma, p.u);
            const double proj = plain_dot(p.u, t);
            for (std::size_t k = 0; k < m; ++k) p.u[k] -= proj * t[k];
            const double n = std::sqrt(plain_dot(p.u, p.u));
            if (n < 1e-12) {
                schedule.failure();
                continue;
            }
            for (double& v : p.u) v /= n;
        }
        const double v = evaluate(p);
        if (v > best) {
            best = v;
            std::swap(best_p, p);
            schedule.success();
        } else {
            schedule.failure();
        }
    }
    return best;
}

ReferenceSolution reference_solve(const Problem& problem, double tolerance,
                                  const std::optional<PrimalPoint>& warm_start) {
    if (!(tolerance >= 1e-14)) throw DomainError("reference tolerance must be >= 1e-14");
    const Dictionary& dict = problem.dictionary();
    const std::size_t n = dict.n();
    const std::size_t m = dict.m();
    const double lambda = problem.lambda();
    const auto y = problem.y();

    Vector x(n, 0.0);
    if (warm_start) {
        if (warm_start->x.size() != n) throw DimensionError("warm start has wrong length");
        for (std::size_t i = 0; i < n; ++i) x[i] = std::max(0.0, warm_start->x[i]);
    }
    Vector r(m);
    auto recompute_residual = [&] {
        std::copy(y.begin(), y.end(), r.begin());
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i] == 0.0) continue;
            const auto a = dict.atom(i);
            for (std::size_t k = 0; k < m; ++k) r[k] -= x[i] * a[k];
        }
    };
    auto update = [&](std::size_t i) {
        const auto a = dict.atom(i);
        const double next = std::max(0.0, x[i] + plain_dot(a, r) - lambda);
        const double delta = next - x[i];
        if (delta != 0.0) {
            for (std::size_t k = 0; k < m; ++k) r[k] -= delta * a[k];
            x[i] = next;
        }
        return std::abs(delta);
    };
    auto certified_gap = [&] {
        recompute_residual();
        Vector corr(n);
        double s = lambda;
        for (std::size_t i = 0; i < n; ++i) {
            corr[i] = plain_dot(dict.atom(i), r);
            s = std::max(s, corr[i]);
        }
        const double kappa = lambda / s;
        double gap = 0.5 * (1.0 - kappa) * (1.0 - kappa) * plain_dot(r, r);
        for (std::size_t i = 0; i < n; ++i) gap += x[i] * (lambda - kappa * corr[i]);
        return gap;
    };

    recompute_residual();
    constexpr std::size_t kMaxSweeps = 1'000'000;
    ReferenceSolution out;
    std::vector<std::size_t> active;
    for (std::size_t sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) update(i);
        out.sweeps = sweep;
        const double gap = certified_gap();
        if (gap <= tolerance) {
            out.x.x = std::move(x);
            out.gap = gap;
            return out;
        }
        active.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (x[i] > 0.0) active.push_back(i);
        for (int inner = 0; inner < 1000; ++inner) {
            double change = 0.0;
            for (std::size_t i : active) change = std::max(change, update(i));
            if (change <= 1e-15) break;
        }
    }
    throw ConvergenceError(kMaxSweeps, certified_gap());
}

ScreenMask exhaustive_standard_screen(const Dictionary& dictionary, const SafeSphere& sphere) {
    if (sphere.center.size() != dictionary.m()) throw DimensionError("sphere centre");
    ScreenMask mask(dictionary.n());
    for (std::size_t i = 0; i < dictionary.n(); ++i) {
        const auto a = dictionary.atom(i);
        double value = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) value += a[k] * sphere.center[k];
        mask.screened[i] = value < sphere.tau ? 1 : 0;
        ++mask.inner_product_count;
    }
    return mask;
}

}  // namespace jscreen::oracle
