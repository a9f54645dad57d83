#include "jscreen/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "jscreen/oracle.hpp"
#include "jscreen/regions.hpp"
#include "jscreen/screening.hpp"
#include "jscreen/solver.hpp"

namespace jscreen::verify {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class... Args>
std::string format(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector unit_vector(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    for (;;) {
        Vector v(m);
        for (double& e : v) e = normal(rng);
        const double n = norm(v);
        if (n > 1e-12) {
            for (double& e : v) e /= n;
            return v;
        }
    }
}

Vector gaussian(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector v(m);
    for (double& e : v) e = normal(rng);
    return v;
}

// Unit vector at angle acos(cosine) from the unit axis, uniform around it.
Vector around(std::span<const double> axis, double cosine, std::mt19937_64& rng) {
    const std::size_t m = axis.size();
    Vector u = gaussian(m, rng);
    const double along = dot(u, axis);
    for (std::size_t k = 0; k < m; ++k) u[k] -= along * axis[k];
    const double un = norm(u);
    Vector a(m);
    const double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
    for (std::size_t k = 0; k < m; ++k) a[k] = cosine * axis[k] + (un > 0.0 ? sine * u[k] / un : 0.0);
    const double an = norm(a);
    for (double& e : a) e /= an;
    return a;
}

// Point of the dome {<a,t> >= delta, |a| <= 1}. A third of the draws land on
// the spherical cap, a third on the flat disc, the rest inside.
Vector dome_point(std::span<const double> t, double delta, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t m = t.size();
    const double kind = unit(rng);
    double alpha = delta + (1.0 - delta) * unit(rng);
    double rho = std::pow(unit(rng), 1.0 / static_cast<double>(std::max<std::size_t>(m - 1, 1)));
    if (kind < 1.0 / 3.0) rho = 1.0;
    else if (kind < 2.0 / 3.0) alpha = delta;
    Vector u = gaussian(m, rng);
    const double along = dot(u, t);
    for (std::size_t k = 0; k < m; ++k) u[k] -= along * t[k];
    const double un = norm(u);
    const double lateral = un > 0.0 ? std::sqrt(std::max(0.0, 1.0 - alpha * alpha)) * rho / un : 0.0;
    Vector a(m);
    for (std::size_t k = 0; k < m; ++k) a[k] = alpha * t[k] + lateral * u[k];
    return a;
}

harness::ExperimentConfig small_config(const SafetyOptions& o) {
    harness::ExperimentConfig c;
    c.m = o.m;
    c.n = o.n;
    c.clusters = o.clusters;
    c.atoms_per_cluster = o.n / o.clusters;
    c.sparsity = o.sparsity;
    return c;
}

std::optional<Observation> positive_observation(const Dictionary& dict, const harness::ExperimentConfig& config,
                                                std::mt19937_64& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        Observation y = harness::generate_observation(dict, config, rng).observation;
        double best = -1.0;
        for (std::size_t i = 0; i < dict.n(); ++i) best = std::max(best, dot(dict.atom(i), y.y));
        if (best > 0.0) return y;
    }
    return std::nullopt;
}

}  // namespace

CheckResult check_safety(const SafetyOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"safety", false, {}, 0.0};
    const harness::ExperimentConfig config = small_config(o);
    const std::size_t per = config.atoms_per_cluster;

    std::size_t violations = 0;
    std::size_t spheres = 0;
    std::size_t screened_events = 0;
    std::size_t region_events = 0;
    double worst_reference_gap = 0.0;
    double worst_coefficient = 0.0;

    for (std::size_t inst = 0; inst < o.instances; ++inst) {
        std::mt19937_64 rng(o.seed * 1'000'003 + inst);
        const harness::ClusteredDictionary data = harness::generate_clustered_dictionary(config, rng);
        const Dictionary& dict = data.dictionary;
        const auto y = positive_observation(dict, config, rng);
        if (!y) continue;

        std::vector<GroupIndex> indices;
        std::vector<std::optional<SphereRegion>> balls;
        std::vector<std::optional<DomeRegion>> domes;
        for (std::size_t l = 0; l < config.clusters; ++l) {
            indices.push_back(build_group_index(dict, data.seeds.col(l)));
            Matrix members(config.m, per);
            for (std::size_t k = 0; k < per; ++k) {
                const auto a = dict.atom(l * per + k);
                std::copy(a.begin(), a.end(), members.col(k).begin());
            }
            const UnitVectorSet set(std::move(members));
            balls.emplace_back(min_enclosing_sphere(set));
            try {
                domes.emplace_back(min_enclosing_dome(set));
            } catch (const DegenerateRegionError&) {
                domes.emplace_back(std::nullopt);
            }
        }

        const double lmax = lambda_max(dict, *y);
        PrimalPoint warm{Vector(config.n, 0.0)};
        for (double lambda : harness::lambda_grid(lmax, 1.5, o.lambdas)) {
            const Problem problem(dict, *y, lambda);
            const oracle::ReferenceSolution ref = oracle::reference_solve(problem, 1e-12, warm);
            worst_reference_gap = std::max(worst_reference_gap, ref.gap);
            warm = ref.x;

            auto audit = [&](const ScreenMask& mask) {
                for (std::size_t i = 0; i < mask.size(); ++i) {
                    if (!mask.screened[i]) continue;
                    ++screened_events;
                    if (std::abs(ref.x.x[i]) > harness::kZeroThreshold) {
                        ++violations;
                        worst_coefficient = std::max(worst_coefficient, std::abs(ref.x.x[i]));
                    }
                }
            };

            SolveOptions solve_options;
            solve_options.gap_tolerance = 1e-9;
            solve_options.max_iters = o.max_iters;
            solve_options.allow_nonconvergence = true;
            solve(problem, solve_options, [&](IterationView& view) {
                ++spheres;
                const SafeSphere& s = view.sphere;
                ScreenMask all(config.n);
                const ScreenMask masks[] = {standard_screen(dict, s), joint_screen_all(indices, s, JointMode::sphere),
                                            joint_screen_all(indices, s, JointMode::dome),
                                            hybrid_screen(dict, indices, s, JointMode::dome)};
                for (const ScreenMask& m : masks) {
                    audit(m);
                    all.merge(m);
                }
                // Enclosing regions of each cluster screen all their members at once.
                ScreenMask regional(config.n);
                for (std::size_t l = 0; l < config.clusters; ++l) {
                    const bool hit = joint_sphere_test(*balls[l], s) || (domes[l] && joint_dome_test(*domes[l], s));
                    if (!hit) continue;
                    ++region_events;
                    for (std::size_t k = 0; k < per; ++k) regional.screened[l * per + k] = 1;
                }
                audit(regional);
                all.merge(regional);
                for (std::size_t i = 0; i < config.n; ++i) view.exclusion[i] |= all.screened[i];
            });
        }
    }
    result.passed = violations == 0 && worst_reference_gap <= 1e-12 && screened_events > 0;
    result.detail = format("%zu instances, %zu spheres, %zu screenings (%zu enclosing-region hits), "
                           "%zu violations (worst |x*| %.3g), max reference gap %.3g",
                           o.instances, spheres, screened_events, region_events, violations, worst_coefficient,
                           worst_reference_gap);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_region_maxima(const RegionMaxOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"region maxima", false, {}, 0.0};
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr std::size_t kDims[] = {2, 3, 5};

    double worst_over = -1e300;   // brute - closed
    double worst_under = -1e300;  // closed - brute
    std::size_t dome_cap_branch = 0, dome_arc_branch = 0;
    std::size_t decisions = 0, decision_mismatch = 0, passes = 0, fails = 0;

    for (std::size_t p = 0; p < o.pairs; ++p) {
        const std::size_t m = kDims[p % 3];
        const Vector t = unit_vector(m, rng);
        Vector c = gaussian(m, rng);
        const oracle::OracleConfig cfg{o.samples, o.seed * 7919 + p, o.tolerance};
        double closed = 0.0, brute = 0.0;
        bool is_sphere = (p / 3) % 2 == 0;
        if (is_sphere) {
            const SphereRegion region(t, 1.5 * unit(rng));
            closed = sphere_region_max(region, c);
            brute = oracle::region_max_bruteforce(region, c, cfg);
            const double tau = closed + 0.2 * (unit(rng) - 0.5);
            const bool pass = joint_sphere_test(region, SafeSphere{c, tau});
            if (std::abs(closed - tau) > 1e-12) {
                ++decisions;
                decision_mismatch += pass != (closed < tau) ? 1 : 0;
                (pass ? passes : fails) += 1;
            }
        } else {
            const DomeRegion region(t, 2.0 * unit(rng) - 1.0);
            const double a = dot(t, c) / norm(c);
            (region.delta() < a ? dome_cap_branch : dome_arc_branch) += 1;
            closed = dome_region_max(region, c);
            brute = oracle::region_max_bruteforce(region, c, cfg);
            const double tau = std::min(norm(c), closed + 0.2 * (unit(rng) - 0.5));
            const bool pass = joint_dome_test(region, SafeSphere{c, tau});
            if (std::abs(closed - tau) > 1e-12) {
                ++decisions;
                decision_mismatch += pass != (closed < tau) ? 1 : 0;
                (pass ? passes : fails) += 1;
            }
        }
        worst_over = std::max(worst_over, brute - closed);
        worst_under = std::max(worst_under, closed - brute);
    }
    result.passed = worst_over <= 1e-12 && worst_under <= o.tolerance && dome_cap_branch > 0 &&
                    dome_arc_branch > 0 && decision_mismatch == 0 && passes > 0 && fails > 0;
    result.detail = format("%zu pairs x %zu samples: max(brute - closed) = %.3g, max(closed - brute) = %.3g; "
                           "dome branches %zu/%zu; test decisions %zu (%zu pass, %zu fail, %zu mismatched)",
                           o.pairs, o.samples, worst_over, worst_under, dome_cap_branch, dome_arc_branch, decisions,
                           passes, fails, decision_mismatch);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_thresholds(const ThresholdOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"threshold tightness", false, {}, 0.0};
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double eps_err = 0.0, dome_err = 0.0, region_err = 0.0;
    std::size_t bad_ends = 0, done = 0, gate_checks = 0, gate_wrong = 0;

    while (done < o.cases) {
        const std::size_t m = 2 + done % 9;
        Vector c = unit_vector(m, rng);
        const double cn = 0.2 + 1.8 * unit(rng);
        for (double& e : c) e *= cn;
        const double tau = std::min(1.0, cn) * (0.05 + 0.95 * unit(rng));
        const SafeSphere sphere{c, tau};
        const Vector t = unit_vector(m, rng);
        if (!(dot(t, c) < tau)) {
            // gate fails: no radius and no dome can pass
            ++gate_checks;
            gate_wrong += joint_sphere_test(SphereRegion(t, 0.0), sphere) ? 1 : 0;
            gate_wrong += joint_dome_test(DomeRegion(t, 1.0), sphere) ? 1 : 0;
            continue;
        }
        ++done;

        const double eps = eps_threshold(t, sphere);
        double lo = 0.0, hi = 2.0 * eps + 1.0;
        if (!joint_sphere_test(SphereRegion(t, lo), sphere) || joint_sphere_test(SphereRegion(t, hi), sphere)) ++bad_ends;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (joint_sphere_test(SphereRegion(t, mid), sphere) ? lo : hi) = mid;
        }
        eps_err = std::max(eps_err, std::abs(0.5 * (lo + hi) - eps));

        const double delta = delta_threshold(t, sphere);
        lo = -1.0;
        hi = 1.0;  // test false at lo, true at hi
        if (joint_dome_test(DomeRegion(t, lo), sphere) || !joint_dome_test(DomeRegion(t, hi), sphere)) ++bad_ends;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (joint_dome_test(DomeRegion(t, mid), sphere) ? hi : lo) = mid;
        }
        dome_err = std::max(dome_err, std::abs(0.5 * (lo + hi) - delta));

        lo = -1.0;
        hi = 1.0;  // dome_region_max decreases in delta
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (dome_region_max(DomeRegion(t, mid), c) >= tau ? lo : hi) = mid;
        }
        region_err = std::max(region_err, std::abs(0.5 * (lo + hi) - delta));
    }
    result.passed = eps_err <= o.tolerance && dome_err <= o.tolerance && region_err <= o.tolerance &&
                    bad_ends == 0 && gate_wrong == 0;
    result.detail = format("%zu cases: |eps flip - eps_tc| <= %.3g, |delta flip - delta_tc| <= %.3g, "
                           "|region-max root - delta_tc| <= %.3g; %zu bracket failures; %zu gate-failed "
                           "spheres, %zu wrongly passed",
                           o.cases, eps_err, dome_err, region_err, bad_ends, gate_checks, gate_wrong);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_dome_in_sphere(const NestingOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"enclosing dome inside enclosing sphere", false, {}, 0.0};
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr std::size_t kDims[] = {2, 3, 5, 10};

    double worst = -1e300;
    double worst_member = -1e300;
    std::size_t degenerate = 0, done = 0;
    while (done < o.sets) {
        const std::size_t m = kDims[done % 4];
        const std::size_t count = 2 + static_cast<std::size_t>(unit(rng) * 19.0);
        const Vector axis = unit_vector(m, rng);
        const double min_cos = -0.3 + 1.29 * unit(rng);
        Matrix members(m, count);
        for (std::size_t j = 0; j < count; ++j) {
            const Vector a = around(axis, min_cos + (1.0 - min_cos) * unit(rng), rng);
            std::copy(a.begin(), a.end(), members.col(j).begin());
        }
        const UnitVectorSet set(members);
        std::optional<DomeRegion> dome;
        try {
            dome.emplace(min_enclosing_dome(set));
        } catch (const DegenerateRegionError&) {
            ++degenerate;
            continue;
        }
        ++done;
        const SphereRegion ball = min_enclosing_sphere(set);
        auto excess = [&](std::span<const double> a) {
            double d = 0.0;
            for (std::size_t k = 0; k < m; ++k) d += (a[k] - ball.t()[k]) * (a[k] - ball.t()[k]);
            return std::sqrt(d) - ball.eps();
        };
        for (std::size_t j = 0; j < count; ++j) {
            worst_member = std::max(worst_member, excess(set[j]));
            worst_member = std::max(worst_member, dome->delta() - dot(dome->t(), set[j]));
        }
        for (std::size_t s = 0; s < o.samples; ++s) worst = std::max(worst, excess(dome_point(dome->t(), dome->delta(), rng)));
    }
    result.passed = worst <= o.tolerance && worst_member <= 1e-10;
    result.detail = format("%zu sets x %zu dome samples: max(|a - centre| - radius) = %.3g; members within %.3g; "
                           "%zu degenerate draws (origin in hull) redrawn",
                           o.sets, o.samples, worst, worst_member, degenerate);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_aux_function(const AuxFunctionOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"g monotone, f concave", false, {}, 0.0};
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> open(-1.0, 1.0);

    double worst_increase = -1e300;
    double worst_curvature = -1e300;
    std::size_t flat_steps = 0, strict_steps = 0;
    const double h = 2.0 / static_cast<double>(o.grid - 1);
    for (std::size_t trial = 0; trial < o.a_values; ++trial) {
        double a = open(rng);
        while (a == -1.0) a = open(rng);
        const double s = std::sqrt(1.0 - a * a);
        auto f = [&](double xi) { return a * xi + s * std::sqrt(1.0 - xi * xi); };
        double prev_xi = -1.0;
        double prev = concave_aux_g(a, prev_xi);
        for (std::size_t k = 1; k < o.grid; ++k) {
            const double xi = k + 1 == o.grid ? 1.0 : -1.0 + h * static_cast<double>(k);
            const double g = concave_aux_g(a, xi);
            worst_increase = std::max(worst_increase, g - prev);
            if (prev_xi >= a + 1e-3 && xi <= 1.0 - 1e-3) {
                ++strict_steps;
                if (!(g < prev)) ++flat_steps;
            }
            if (xi > -0.999 && xi < 0.999 && xi - h > -1.0 && xi + h < 1.0) {
                worst_curvature = std::max(worst_curvature, f(xi + h) - 2.0 * f(xi) + f(xi - h));
            }
            prev = g;
            prev_xi = xi;
        }
    }
    result.passed = worst_increase <= 1e-12 && flat_steps == 0 && strict_steps > 0 && worst_curvature <= 1e-12;
    result.detail = format("%zu values of A on a %zu-point grid: max increase %.3g, %zu of %zu steps past A not "
                           "strictly decreasing, max second difference of f %.3g",
                           o.a_values, o.grid, worst_increase, flat_steps, strict_steps, worst_curvature);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_index_equivalence(const IndexOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"sorted-index equivalence", false, {}, 0.0};
    std::size_t mismatches = 0, comparisons = 0, sphere_marks = 0, dome_marks = 0;

    for (std::size_t inst = 0; inst < o.instances; ++inst) {
        std::mt19937_64 rng(o.seed * 1'000'003 + inst);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        harness::ExperimentConfig config;
        config.m = 10 + inst % 21;
        config.clusters = 5 + inst % 11;
        config.atoms_per_cluster = 4 + inst % 13;
        config.n = config.clusters * config.atoms_per_cluster;
        config.sparsity = std::min<std::size_t>(5, config.n);
        const harness::ClusteredDictionary data = harness::generate_clustered_dictionary(config, rng);
        const Dictionary& dict = data.dictionary;

        std::vector<GroupIndex> indices;
        for (std::size_t l = 0; l < config.clusters; ++l) indices.push_back(build_group_index(dict, data.seeds.col(l)));
        indices.push_back(build_group_index(dict, unit_vector(config.m, rng)));

        // GAP spheres along a short FISTA run plus a few arbitrary ones.
        std::vector<SafeSphere> spheres;
        if (const auto y = positive_observation(dict, config, rng)) {
            const Problem problem(dict, *y, lambda_max(dict, *y) * std::pow(10.0, -1.5 * unit(rng)));
            SolveOptions so;
            so.max_iters = 60;
            so.allow_nonconvergence = true;
            solve(problem, so, [&](IterationView& v) {
                if (v.state.iteration % 6 == 0) spheres.push_back(v.sphere);
            });
        }
        for (int k = 0; k < 5; ++k) {
            Vector c = unit_vector(config.m, rng);
            const double cn = 0.3 + 1.2 * unit(rng);
            for (double& e : c) e *= cn;
            spheres.push_back(SafeSphere{c, std::min(1.0, cn) * unit(rng)});
        }

        for (const SafeSphere& s : spheres) {
            const double cn = norm(s.center);
            for (const GroupIndex& g : indices) {
                ScreenMask by_sphere(dict.n()), by_dome(dict.n());
                screen_by_sphere_index(g, s, by_sphere);
                screen_by_dome_index(g, s, by_dome);
                const double eps = eps_threshold(g.t(), s);
                const double tc = dot(g.t(), s.center);
                const bool live = tc < s.tau && s.tau <= cn && cn > 0.0;
                const double delta = live ? delta_threshold(g.t(), s) : 0.0;
                for (std::size_t i = 0; i < dict.n(); ++i) {
                    const auto a = dict.atom(i);
                    double sq = 0.0;
                    for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - g.t()[k]) * (a[k] - g.t()[k]);
                    const bool naive_sphere = std::sqrt(sq) < eps;
                    const bool naive_dome = live && dot(g.t(), a) > delta;
                    mismatches += (by_sphere[i] != naive_sphere) + (by_dome[i] != naive_dome);
                    comparisons += 2;
                }
                sphere_marks += by_sphere.count();
                dome_marks += by_dome.count();
            }
        }
    }
    result.passed = mismatches == 0 && sphere_marks > 0 && dome_marks > 0;
    result.detail = format("%zu instances, %zu per-atom comparisons, %zu mismatches (%zu sphere / %zu dome marks)",
                           o.instances, comparisons, mismatches, sphere_marks, dome_marks);
    result.seconds = seconds_since(start);
    return result;
}

CheckResult check_radius_bound(const harness::ExperimentResult& run) {
    CheckResult result{"tau <= |c| below lambda_max", false, {}, 0.0};
    const auto& a = run.audit;
    result.passed = a.radius_violations == 0 && a.spheres_checked > 0;
    result.detail = format("%zu spheres with lambda < lambda_max, %zu violations, max(tau - |c|) = %.3g, "
                           "%llu dome tests skipped",
                           a.spheres_checked, a.radius_violations, a.max_tau_excess,
                           static_cast<unsigned long long>(a.skipped_dome_tests));
    return result;
}

CheckResult check_dominance(const harness::ExperimentResult& run) {
    CheckResult result{"dominance", false, {}, 0.0};
    const harness::DetectionGrid* standard = run.grid(harness::Mode::standard);
    std::size_t cells = 0, rate_violations = 0, joint_grids = 0;
    double mean_gap = 0.0;
    if (standard) {
        for (const harness::DetectionGrid& g : run.grids) {
            if (g.mode != harness::Mode::sphere && g.mode != harness::Mode::dome) continue;
            ++joint_grids;
            for (std::size_t k = 0; k < g.cells.size(); ++k) {
                ++cells;
                const double diff = standard->cells[k].detection_rate - g.cells[k].detection_rate;
                mean_gap += diff;
                if (diff < 0.0) ++rate_violations;
            }
        }
    }
    if (cells) mean_gap /= static_cast<double>(cells);
    result.passed = standard && joint_grids > 0 && run.audit.dominance_violations == 0 && rate_violations == 0;
    result.detail = format("%zu joint cells: %zu mask-inclusion violations, %zu cells with joint rate above "
                           "standard; mean standard - joint rate %.3f",
                           cells, run.audit.dominance_violations, rate_violations, mean_gap);
    return result;
}

CheckResult check_complexity(const harness::ExperimentConfig& config, const harness::ExperimentResult& run,
                             const ComplexityOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"inner-product counts", false, {}, 0.0};
    bool counts_ok = true;
    std::string counts;
    for (const auto& [mode, stats] : run.invocations) {
        std::uint64_t expect = 0;
        if (mode == harness::Mode::standard) expect = config.n;
        else if (mode == harness::Mode::sphere || mode == harness::Mode::dome) expect = config.clusters;
        else continue;
        counts_ok = counts_ok && stats.invocations > 0 && stats.min_per_invocation == expect &&
                    stats.max_per_invocation == expect;
        counts += format("%s %llu..%llu over %llu calls; ", std::string(harness::to_string(mode)).c_str(),
                         static_cast<unsigned long long>(stats.min_per_invocation),
                         static_cast<unsigned long long>(stats.max_per_invocation),
                         static_cast<unsigned long long>(stats.invocations));
    }

    // Timing on GAP spheres from the same data.
    std::mt19937_64 rng(config.rng_seed);
    const harness::ClusteredDictionary data = harness::generate_clustered_dictionary(config, rng);
    const auto y = positive_observation(data.dictionary, config, rng);
    double ratio = 1e300;
    if (y) {
        std::vector<GroupIndex> indices;
        for (std::size_t l = 0; l < data.seeds.cols(); ++l)
            indices.push_back(build_group_index(data.dictionary, data.seeds.col(l)));
        std::vector<SafeSphere> spheres;
        const Problem problem(data.dictionary, *y, lambda_max(data.dictionary, *y) * 0.3);
        SolveOptions so;
        so.max_iters = o.spheres * 10;
        so.allow_nonconvergence = true;
        solve(problem, so, [&](IterationView& v) {
            if (v.state.iteration % 10 == 0) spheres.push_back(v.sphere);
        });
        std::size_t sink = 0;
        auto time_it = [&](auto&& fn) {
            const auto t0 = Clock::now();
            for (std::size_t r = 0; r < o.repeats; ++r)
                for (const SafeSphere& s : spheres) sink += fn(s).count();
            return seconds_since(t0);
        };
        const double standard_s = time_it([&](const SafeSphere& s) { return standard_screen(data.dictionary, s); });
        const double sphere_s = time_it([&](const SafeSphere& s) { return joint_screen_all(indices, s, JointMode::sphere); });
        const double dome_s = time_it([&](const SafeSphere& s) { return joint_screen_all(indices, s, JointMode::dome); });
        ratio = std::max(sphere_s, dome_s) / standard_s;
        const double calls = static_cast<double>(o.repeats * spheres.size());
        counts += format("per call: standard %.2f us, joint sphere %.2f us, joint dome %.2f us (sink %zu)",
                         1e6 * standard_s / calls, 1e6 * sphere_s / calls, 1e6 * dome_s / calls, sink % 10);
    }
    result.passed = counts_ok && ratio <= o.max_time_ratio;
    result.detail = counts + format("; joint/standard time ratio %.3f (bound %.2f)", ratio, o.max_time_ratio);
    result.seconds = seconds_since(start);
    return result;
}

bool svg_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t pos = 0;
    bool saw_root = false;
    while ((pos = text.find('<', pos)) != std::string::npos) {
        const std::size_t close = text.find('>', pos);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(pos + 1, close - pos - 1);
        pos = close + 1;
        if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
        if (tag[0] == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
        if (stack.empty()) {
            if (name != "svg" || saw_root) return false;
            saw_root = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return saw_root && stack.empty();
}

CheckResult check_full_scale(std::span<const harness::ExperimentResult> runs, const std::filesystem::path& out_dir,
                              const FullScaleOptions& o) {
    const auto start = Clock::now();
    CheckResult result{"full-scale benchmark", false, {}, 0.0};
    std::filesystem::create_directories(out_dir);

    double slowest = 0.0;
    bool files_ok = true;
    std::vector<std::vector<double>> per_cell;  // cell -> rate per run
    std::size_t nonconverged = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const harness::ExperimentResult& run = runs[r];
        slowest = std::max(slowest, run.seconds);
        for (const auto& rec : run.path) nonconverged += rec.converged ? 0 : 1;
        const auto csv = out_dir / ("detection_run" + std::to_string(r) + ".csv");
        harness::emit_csv(run.grids, csv);
        files_ok = files_ok && harness::parse_csv(csv) == run.grids;
        for (const harness::DetectionGrid& g : run.grids) {
            const auto svg = out_dir / ("heatmap_run" + std::to_string(r) + "_" + std::string(harness::to_string(g.mode)) + ".svg");
            harness::emit_heatmap(g, svg);
            std::ifstream in(svg);
            std::stringstream buffer;
            buffer << in.rdbuf();
            const std::string text = buffer.str();
            std::size_t rects = 0;
            for (std::size_t p = 0; (p = text.find("class=\"cell\"", p)) != std::string::npos; ++p) ++rects;
            files_ok = files_ok && svg_well_formed(text) && rects == g.cells.size();
        }

        const harness::DetectionGrid* standard = run.grid(harness::Mode::standard);
        if (!standard) {
            files_ok = false;
            continue;
        }
        std::size_t k = 0;
        for (std::size_t row = 0; row < standard->iterations.size(); ++row) {
            if (standard->iterations[row] < o.late_iteration) continue;
            for (std::size_t col = 0; col < standard->lambdas.size(); ++col) {
                const double ratio = standard->neg_log10_ratio[col];
                if (ratio < o.ratio_low || ratio > o.ratio_high) continue;
                if (per_cell.size() <= k) per_cell.emplace_back();
                per_cell[k++].push_back(standard->cell(row, col).detection_rate);
            }
        }
    }

    double worst_median = 1.0, mean_median = 0.0;
    std::size_t above_09 = 0;
    for (auto& rates : per_cell) {
        std::sort(rates.begin(), rates.end());
        const std::size_t h = rates.size() / 2;
        const double median = rates.size() % 2 ? rates[h] : 0.5 * (rates[h - 1] + rates[h]);
        worst_median = std::min(worst_median, median);
        mean_median += median;
        above_09 += median > 0.9 ? 1 : 0;
    }
    if (!per_cell.empty()) mean_median /= static_cast<double>(per_cell.size());

    result.passed = !runs.empty() && slowest < o.time_limit_seconds && files_ok && !per_cell.empty() &&
                    worst_median >= o.min_median_rate;
    result.detail = format("%zu runs, slowest %.1f s (limit %.0f s); csv/svg %s; %zu late cells at "
                           "-log10(lambda/lambda_max) in [%.1f, %.1f]: min median rate %.4f, mean %.4f, "
                           "%zu above 0.9; %zu lambdas stopped at the iteration cap",
                           runs.size(), slowest, o.time_limit_seconds, files_ok ? "well-formed" : "MALFORMED",
                           per_cell.size(), o.ratio_low, o.ratio_high, worst_median, mean_median, above_09,
                           nonconverged);
    result.seconds = seconds_since(start);
    return result;
}

}  // namespace jscreen::verify
