#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "jscreen/oracle.hpp"
#include "test_support.hpp"

using namespace jscreen;
using doctest::Approx;

TEST_CASE("region_max_bruteforce degenerate regions are exact") {
    const oracle::OracleConfig cfg{1000, 1, 1e-3};
    const Vector t{0.6, 0.0, 0.8};
    const Vector c{0.3, -1.0, 0.4};
    CHECK(oracle::region_max_bruteforce(SphereRegion(t, 0.0), c, cfg) == Approx(0.5).epsilon(1e-15));
    CHECK(oracle::region_max_bruteforce(DomeRegion(t, 1.0), c, cfg) == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("region_max_bruteforce is deterministic") {
    const oracle::OracleConfig cfg{5000, 42, 1e-3};
    const Vector t{0.0, 1.0, 0.0};
    const Vector c{0.3, 0.2, -0.5};
    CHECK(oracle::region_max_bruteforce(DomeRegion(t, 0.2), c, cfg) ==
          oracle::region_max_bruteforce(DomeRegion(t, 0.2), c, cfg));
}

TEST_CASE("region_max_bruteforce converges to the closed forms in m = 3") {
    std::mt19937_64 rng(173);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const Vector t = testing::unit_vector(3, rng);
        const Vector c = testing::gaussian_vector(3, rng);
        const SphereRegion s(t, unit(rng));
        const DomeRegion d(t, 2.0 * unit(rng) - 1.0);
        const double cs = sphere_region_max(s, c);
        const double cd = dome_region_max(d, c);
        double prev_s = -1e300, prev_d = -1e300;
        for (std::size_t samples : {250'000, 500'000, 1'000'000}) {
            const oracle::OracleConfig cfg{samples, static_cast<std::uint64_t>(trial), 1e-3};
            const double bs = oracle::region_max_bruteforce(s, c, cfg);
            const double bd = oracle::region_max_bruteforce(d, c, cfg);
            CHECK(bs <= cs + 1e-12);
            CHECK(bd <= cd + 1e-12);
            prev_s = std::max(prev_s, bs);
            prev_d = std::max(prev_d, bd);
        }
        CHECK(cs - prev_s <= 1e-3);
        CHECK(cd - prev_d <= 1e-3);
    }
}

TEST_CASE("reference_solve") {
    SUBCASE("orthonormal design has a closed form") {
        std::mt19937_64 rng(179);
        Matrix q(6, 6);
        for (std::size_t k = 0; k < 6; ++k) q(k, (k + 2) % 6) = (k % 2 ? -1.0 : 1.0);
        const Dictionary d(q);
        const Observation y{testing::gaussian_vector(6, rng)};
        const double lambda = 0.3;
        const auto ref = oracle::reference_solve(Problem(d, y, lambda), 1e-14);
        for (std::size_t i = 0; i < 6; ++i) {
            const double expect = std::max(0.0, testing::naive_dot(d.atom(i), y.y) - lambda);
            CHECK(ref.x.x[i] == Approx(expect).epsilon(1e-10));
        }
    }
    SUBCASE("zero at and above lambda_max") {
        std::mt19937_64 rng(181);
        const Dictionary d = testing::random_dictionary(10, 40, 181);
        const Observation y = testing::positive_observation(d, rng, 3);
        for (double f : {1.0, 2.0}) {
            const auto ref = oracle::reference_solve(Problem(d, y, lambda_max(d, y) * f), 1e-14);
            CHECK(*std::max_element(ref.x.x.begin(), ref.x.x.end()) <= 1e-14);
            CHECK(ref.gap <= 1e-14);
        }
    }
    SUBCASE("certified gap agrees with the solver's gap") {
        std::mt19937_64 rng(191);
        for (int trial = 0; trial < 20; ++trial) {
            const Dictionary d = testing::random_dictionary(20, 100, 1200 + trial);
            const Observation y = testing::positive_observation(d, rng, 5);
            const Problem p(d, y, lambda_max(d, y) * std::pow(10.0, -1.5 * (trial + 1) / 20.0));
            const auto ref = oracle::reference_solve(p, 1e-12);
            CHECK(ref.gap <= 1e-12);
            CHECK(*std::min_element(ref.x.x.begin(), ref.x.x.end()) >= 0.0);
            CHECK(duality_gap(p, ref.x, dual_feasible_point(p, ref.x)) <= 1e-10);
        }
    }
    SUBCASE("warm start and tolerance validation") {
        const Dictionary d = testing::random_dictionary(5, 8, 193);
        std::mt19937_64 rng(193);
        const Observation y = testing::positive_observation(d, rng, 2);
        const Problem p(d, y, lambda_max(d, y) * 0.5);
        const auto cold = oracle::reference_solve(p, 1e-13);
        const auto warm = oracle::reference_solve(p, 1e-13, cold.x);
        CHECK(warm.sweeps <= 1);
        CHECK_THROWS_AS(oracle::reference_solve(p, 1e-15), DomainError);
    }
}

TEST_CASE("exhaustive_standard_screen") {
    const Dictionary d = testing::random_dictionary(3, 9, 197);
    CHECK(oracle::exhaustive_standard_screen(d, SafeSphere{Vector(3, 0.0), 1.0}).count() == 9);
    CHECK(oracle::exhaustive_standard_screen(d, SafeSphere{Vector(3, 0.0), -1.0}).count() == 0);
    CHECK(oracle::exhaustive_standard_screen(d, SafeSphere{Vector(3, 0.0), -1.0}).inner_product_count == 9);
}
