#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "jscreen/kernels.hpp"
#include "jscreen/oracle.hpp"
#include "jscreen/solver.hpp"
#include "test_support.hpp"

using namespace jscreen;
using doctest::Approx;

namespace {

Dictionary identity2() { return Dictionary(Matrix(2, 2, {1.0, 0.0, 0.0, 1.0})); }

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double max_correlation(const Dictionary& d, std::span<const double> v) {
    double best = -1e300;
    for (std::size_t i = 0; i < d.n(); ++i) best = std::max(best, testing::naive_dot(d.atom(i), v));
    return best;
}

Vector scaled_residual(const Dictionary& d, std::span<const double> y, std::span<const double> x, double lambda) {
    Vector r = residual(d, y, x);
    for (double& v : r) v /= lambda;
    return r;
}

}  // namespace

TEST_CASE("kernel table in use") { MESSAGE("kernels: " << kernels::active().name); }

TEST_CASE("spectral norm of simple dictionaries") {
    CHECK(spectral_norm_squared(identity2()) == Approx(1.0).epsilon(1e-12));
    // two identical atoms: A^T A = [[1,1],[1,1]], top eigenvalue 2
    const Dictionary twin(Matrix(2, 2, {1.0, 0.0, 1.0, 0.0}));
    CHECK(spectral_norm_squared(twin) == Approx(2.0).epsilon(1e-12));
    CHECK(default_step_size(twin) == Approx(1.0 / 2.02).epsilon(1e-12));
}

TEST_CASE("fista_step") {
    const Dictionary d = identity2();

    SUBCASE("zero is a fixed point when y = 0") {
        const Observation y{{0.0, 0.0}};
        const Problem p(d, y, 0.5);
        SolverState s = make_solver_state(p, PrimalPoint{{0.0, 0.0}}, 0.9);
        for (int k = 0; k < 5; ++k) fista_step(s, p);
        CHECK(s.x.x == Vector{0.0, 0.0});
        CHECK(s.iteration == 5);
    }
    SUBCASE("orthonormal closed form") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 0.5);
        SolverState s = make_solver_state(p, PrimalPoint{{0.0, 0.0}}, default_step_size(d));
        for (int k = 0; k < 200; ++k) fista_step(s, p);
        CHECK(s.x.x[0] == Approx(1.5).epsilon(1e-10));
        CHECK(s.x.x[1] == 0.0);
    }
    SUBCASE("lambda >= lambda_max drives x to zero") {
        std::mt19937_64 rng(41);
        const Dictionary r = testing::random_dictionary(10, 30, 41);
        const Observation y = testing::positive_observation(r, rng, 3);
        const double lmax = lambda_max(r, y);
        for (double factor : {1.0, 1.5}) {
            const Problem p(r, y, lmax * factor);
            Vector start(30, 0.2);
            SolverState s = make_solver_state(p, PrimalPoint{start}, default_step_size(r));
            for (int k = 0; k < 3000; ++k) fista_step(s, p);
            CHECK(*std::max_element(s.x.x.begin(), s.x.x.end()) <= 1e-8);
        }
    }
    SUBCASE("cached products stay exact") {
        std::mt19937_64 rng(43);
        const Dictionary r = testing::random_dictionary(12, 40, 43);
        const Observation y{testing::gaussian_vector(12, rng)};
        const Problem p(r, y, 0.05);
        SolverState s = make_solver_state(p, PrimalPoint{Vector(40, 0.0)}, default_step_size(r));
        for (int k = 0; k < 50; ++k) fista_step(s, p);
        const Vector expect = residual(r, y.y, s.x.x);
        for (std::size_t k = 0; k < expect.size(); ++k) CHECK(std::abs(s.residual[k] - expect[k]) <= 1e-10);
        for (std::size_t i = 0; i < r.n(); ++i)
            CHECK(std::abs(s.correlation[i] - testing::naive_dot(r.atom(i), expect)) <= 1e-10);
    }
    SUBCASE("ISTA objective never increases") {
        std::mt19937_64 rng(47);
        const Dictionary r = testing::random_dictionary(15, 60, 47);
        const Observation y{testing::gaussian_vector(15, rng)};
        const Problem p(r, y, 0.1);
        SolverState s = make_solver_state(p, PrimalPoint{Vector(60, 0.0)}, default_step_size(r));
        double prev = primal_objective(p, s.x);
        for (int k = 0; k < 300; ++k) {
            fista_step(s, p, Acceleration::none);
            const double now = primal_objective(p, s.x);
            CHECK(now <= prev + 1e-13);
            prev = now;
        }
    }
    SUBCASE("frozen coordinates stay at zero") {
        const Observation y{{2.0, 3.0}};
        const Problem p(d, y, 0.5);
        SolverState s = make_solver_state(p, PrimalPoint{{0.0, 0.0}}, 0.9);
        const std::uint8_t frozen[] = {0, 1};
        for (int k = 0; k < 20; ++k) fista_step(s, p, Acceleration::fista, frozen);
        CHECK(s.x.x[1] == 0.0);
        CHECK(s.x.x[0] > 1.0);
    }
    SUBCASE("oversized step diverges") {
        const Dictionary twin(Matrix(2, 2, {1.0, 0.0, 1.0, 0.0}));
        const Observation y{{1.0, 0.0}};
        const Problem p(twin, y, 1e-3);
        SolverState s = make_solver_state(p, PrimalPoint{{0.0, 0.0}}, 1e6);
        CHECK_THROWS_AS(
            [&] {
                for (int k = 0; k < 5000; ++k) fista_step(s, p);
            }(),
            DivergenceError);
    }
    SUBCASE("negative start rejected") {
        const Observation y{{1.0, 0.0}};
        const Problem p(d, y, 0.5);
        CHECK_THROWS_AS(make_solver_state(p, PrimalPoint{{-1.0, 0.0}}, 0.5), DomainError);
    }
}

TEST_CASE("dual_feasible_point") {
    const Dictionary d = identity2();
    SUBCASE("exact optimum gives (y - Ax*) / lambda") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 0.5);
        const DualPoint th = dual_feasible_point(p, PrimalPoint{{1.5, 0.0}});
        CHECK(th.theta == Vector{1.0, -2.0});
    }
    SUBCASE("x = 0 above lambda_max gives y / lambda") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 4.0);
        const DualPoint th = dual_feasible_point(p, PrimalPoint{{0.0, 0.0}});
        CHECK(th.theta == Vector{0.5, -0.25});
    }
    SUBCASE("random points are feasible") {
        std::mt19937_64 rng(53);
        for (int trial = 0; trial < 40; ++trial) {
            const Dictionary r = testing::random_dictionary(10, 50, 500 + trial);
            const Observation y{testing::gaussian_vector(10, rng, 3.0)};
            Vector x = testing::gaussian_vector(50, rng, 0.2);
            for (double& v : x) v = std::max(0.0, v);
            const Problem p(r, y, 0.05);
            const DualPoint th = dual_feasible_point(p, PrimalPoint{x});
            CHECK(max_correlation(r, th.theta) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("duality_gap") {
    const Dictionary d = identity2();
    const Observation y{{2.0, -1.0}};
    const Problem p(d, y, 0.5);

    SUBCASE("zero at the optimum") {
        const PrimalPoint x{{1.5, 0.0}};
        CHECK(duality_gap(p, x, dual_feasible_point(p, x)) <= 1e-9);
    }
    SUBCASE("x = 0 with the rescaled dual equals P - D") {
        // lambda_max = 2, theta = y * min(lambda, lambda_max) / (lambda lambda_max) = y / 2
        const PrimalPoint x{{0.0, 0.0}};
        const DualPoint th{{1.0, -0.5}};
        const double primal = 0.5 * (4.0 + 1.0);
        const double dual = 0.5 * 5.0 - 0.5 * ((2.0 - 0.5) * (2.0 - 0.5) + (-1.0 + 0.25) * (-1.0 + 0.25));
        CHECK(duality_gap(p, x, th) == Approx(primal - dual).epsilon(1e-14));
        CHECK(dual_feasible_point(p, x).theta == th.theta);
    }
    SUBCASE("infeasible theta rejected") {
        CHECK_THROWS_AS(duality_gap(p, PrimalPoint{{0.0, 0.0}}, DualPoint{{1.5, 0.0}}), InfeasibleDualError);
    }
    SUBCASE("nonnegative on random feasible pairs") {
        std::mt19937_64 rng(59);
        for (int trial = 0; trial < 40; ++trial) {
            const Dictionary r = testing::random_dictionary(8, 25, 600 + trial);
            const Observation yy{testing::gaussian_vector(8, rng)};
            Vector x = testing::gaussian_vector(25, rng, 0.3);
            for (double& v : x) v = std::max(0.0, v);
            const Problem pr(r, yy, 0.2);
            Vector z(25);
            for (double& v : z) v = std::abs(testing::gaussian_vector(1, rng)[0]);
            CHECK(duality_gap(pr, PrimalPoint{x}, dual_feasible_point(pr, PrimalPoint{z})) >= 0.0);
        }
    }
}

TEST_CASE("gap_safe_sphere") {
    const Dictionary d = identity2();
    const Observation y{{2.0, -1.0}};
    const Problem p(d, y, 0.5);

    SUBCASE("collapses at the optimum") {
        const PrimalPoint x{{1.5, 0.0}};
        const SafeSphere s = gap_safe_sphere(p, x, dual_feasible_point(p, x));
        CHECK(s.radius() >= 0.0);
        CHECK(s.radius() <= 1e-6);
        CHECK(s.center == Vector{1.0, -2.0});
    }
    SUBCASE("radius is sqrt(2 gap) / lambda up to the rounding floor") {
        const PrimalPoint x{{0.0, 0.0}};
        const DualPoint th = dual_feasible_point(p, x);
        const double gap = duality_gap(p, x, th);
        const SafeSphere s = gap_safe_sphere(p, x, th);
        CHECK(s.radius() >= std::sqrt(2.0 * gap) / 0.5);
        CHECK(s.radius() == Approx(std::sqrt(2.0 * gap) / 0.5).epsilon(1e-12));
    }
    SUBCASE("contains the high-precision dual optimum") {
        std::mt19937_64 rng(61);
        for (int trial = 0; trial < 20; ++trial) {
            const Dictionary r = testing::random_dictionary(15, 60, 700 + trial);
            const Observation yy = testing::positive_observation(r, rng, 4);
            const double lambda = lambda_max(r, yy) * 0.3;
            const Problem pr(r, yy, lambda);
            const auto ref = oracle::reference_solve(pr, 1e-14);
            const Vector theta_star = scaled_residual(r, yy.y, ref.x.x, lambda);
            SolveOptions opt;
            opt.gap_tolerance = 1e-6;
            const SolveResult res = solve(pr, opt);
            const SafeSphere s = gap_safe_sphere(pr, res.x, res.theta);
            CHECK(distance(s.center, theta_star) <= s.radius());
        }
    }
}

TEST_CASE("solve") {
    const Dictionary d = identity2();
    SUBCASE("lambda = lambda_max returns zero") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 2.0);
        const SolveResult r = solve(p, {});
        CHECK(r.converged);
        CHECK(r.x.x == Vector{0.0, 0.0});
        CHECK(r.iterations == 1);
    }
    SUBCASE("orthonormal closed form") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 0.5);
        SolveOptions opt;
        opt.gap_tolerance = 1e-14;
        const SolveResult r = solve(p, opt);
        CHECK(r.x.x[0] == Approx(1.5).epsilon(1e-7));
        CHECK(r.x.x[1] == 0.0);
    }
    SUBCASE("non-convergence is reported with the final gap") {
        std::mt19937_64 rng(67);
        const Dictionary r = testing::random_dictionary(20, 80, 67);
        const Observation y = testing::positive_observation(r, rng, 5);
        const Problem p(r, y, lambda_max(r, y) * 0.05);
        SolveOptions opt;
        opt.max_iters = 3;
        try {
            solve(p, opt);
            FAIL("expected ConvergenceError");
        } catch (const ConvergenceError& e) {
            CHECK(e.iterations() == 3);
            CHECK(e.final_gap() > opt.gap_tolerance);
        }
        opt.allow_nonconvergence = true;
        const SolveResult res = solve(p, opt);
        CHECK_FALSE(res.converged);
        CHECK(res.iterations == 3);
    }
    SUBCASE("callback sees every iterate, exclusion pins coordinates") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 0.5);
        std::size_t calls = 0;
        const SolveResult r = solve(p, {}, [&](IterationView& v) {
            CHECK(v.state.iteration == calls);
            ++calls;
            v.exclusion[1] = 1;
        });
        CHECK(calls == r.iterations);
        CHECK(r.x.x[1] == 0.0);
        CHECK(r.x.x[0] == Approx(1.5).epsilon(1e-4));
    }
    SUBCASE("warm start at the optimum stops immediately") {
        const Observation y{{2.0, -1.0}};
        const Problem p(d, y, 0.5);
        SolveOptions opt;
        opt.x0 = PrimalPoint{{1.5, 0.0}};
        CHECK(solve(p, opt).iterations == 1);
    }
    SUBCASE("KKT conditions at tolerance 1e-9 on a clustered-style instance") {
        std::mt19937_64 rng(71);
        const Dictionary r = testing::random_dictionary(30, 200, 71);
        const Observation y = testing::positive_observation(r, rng, 10);
        const Problem p(r, y, lambda_max(r, y) * 0.1);
        SolveOptions opt;
        opt.gap_tolerance = 1e-9;
        opt.max_iters = 200000;
        const SolveResult res = solve(p, opt);
        for (std::size_t i = 0; i < r.n(); ++i) {
            const double slack = 1.0 - testing::naive_dot(r.atom(i), res.theta.theta);
            CHECK(slack >= -1e-12);
            CHECK(std::min(res.x.x[i], slack) <= 1e-6);
        }
    }
}

TEST_CASE("every intermediate sphere contains the dual optimum") {
    std::mt19937_64 rng(73);
    std::size_t spheres = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Dictionary r = testing::random_dictionary(20, 100, 800 + trial);
        const Observation y = testing::positive_observation(r, rng, 5);
        const double lmax = lambda_max(r, y);
        const double lambda = lmax * std::pow(10.0, -std::uniform_real_distribution<double>(0.05, 1.5)(rng));
        const Problem p(r, y, lambda);
        const auto ref = oracle::reference_solve(p, 1e-14);
        const Vector theta_star = scaled_residual(r, y.y, ref.x.x, lambda);

        SolveOptions opt;
        opt.gap_tolerance = 1e-12;
        opt.max_iters = 500000;
        std::vector<SafeSphere> seen;
        const SolveResult res = solve(p, opt, [&](IterationView& v) { seen.push_back(v.sphere); });
        for (const SafeSphere& s : seen) {
            CHECK(distance(s.center, theta_star) <= s.radius() + 1e-9);
            CHECK(distance(s.center, res.theta.theta) <= s.radius() + 1e-9);
            CHECK(s.tau <= testing::naive_norm(s.center) + 1e-12);
        }
        spheres += seen.size();
    }
    MESSAGE(spheres << " spheres checked");
}

TEST_CASE("TraceWriter rows") {
    std::ostringstream out;
    TraceWriter w(out);
    w.row(0, 0.5, 1.25);
    w.row(3, 1e-9, 0.1);
    CHECK(out.str() == "iteration,gap,objective\n0,0.5,1.25\n3,1e-09,0.1\n");
}
