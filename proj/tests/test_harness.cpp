#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "jscreen/harness.hpp"
#include "test_support.hpp"

using namespace jscreen;
using namespace jscreen::harness;
using doctest::Approx;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.m = 20;
    c.clusters = 10;
    c.atoms_per_cluster = 10;
    c.n = 100;
    c.sparsity = 5;
    c.lambda_grid_points = 8;
    c.max_iters_per_lambda = 2000;
    c.rng_seed = 7;
    return c;
}

DetectionGrid toy_grid(std::size_t rows, std::size_t cols, auto rate) {
    DetectionGrid g;
    g.mode = Mode::dome;
    for (std::size_t c = 0; c < cols; ++c) {
        g.lambdas.push_back(std::pow(10.0, -0.1 * static_cast<double>(c)));
        g.neg_log10_ratio.push_back(0.1 * static_cast<double>(c));
    }
    for (std::size_t r = 0; r < rows; ++r) g.iterations.push_back(r + 1);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g.cells.push_back(DetectionCell{rate(r, c), r, c + 1, 3 * r});
    return g;
}

struct SvgCell {
    int row, col;
    std::string fill;
};

std::vector<SvgCell> svg_cells(const std::string& svg) {
    static const std::regex cell(
        R"re(<rect class="cell"[^>]*fill="(#[0-9a-f]{6})" data-row="(\d+)" data-col="(\d+)")re");
    std::vector<SvgCell> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it)
        out.push_back({std::stoi((*it)[2]), std::stoi((*it)[3]), (*it)[1]});
    return out;
}

double luminance(const std::string& hex) {
    const int r = std::stoi(hex.substr(1, 2), nullptr, 16);
    const int g = std::stoi(hex.substr(3, 2), nullptr, 16);
    const int b = std::stoi(hex.substr(5, 2), nullptr, 16);
    return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

}  // namespace

TEST_CASE("config validation and json") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.n == 2000);
    CHECK(c.clusters * c.atoms_per_cluster == c.n);
    ExperimentConfig bad = c;
    bad.n = 1999;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.seed_coherence = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.sparsity = 2001;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    ExperimentConfig s = small_config();
    s.modes = {Mode::dome, Mode::standard};
    nlohmann::json j = s;
    ExperimentConfig back;
    j.get_to(back);
    CHECK(back.m == s.m);
    CHECK(back.n == s.n);
    CHECK(back.rng_seed == s.rng_seed);
    CHECK(back.modes == s.modes);

    ExperimentConfig partial;
    nlohmann::json::parse(R"({"m": 30, "mode": "sphere"})").get_to(partial);
    CHECK(partial.m == 30);
    CHECK(partial.n == 2000);
    CHECK(partial.modes == std::vector<Mode>{Mode::sphere});
    CHECK_THROWS(nlohmann::json::parse(R"({"mode": "ellipsoid"})").get_to(partial));
}

TEST_CASE("mode names") {
    for (Mode m : kAllModes) CHECK(parse_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_mode("joint"), std::invalid_argument);
}

TEST_CASE("generate_clustered_dictionary") {
    SUBCASE("default scale") {
        ExperimentConfig c;
        std::mt19937_64 rng(0);
        const ClusteredDictionary d = generate_clustered_dictionary(c, rng);
        CHECK(d.dictionary.m() == 100);
        CHECK(d.dictionary.n() == 2000);
        CHECK(d.seeds.cols() == 100);
        for (std::size_t i = 0; i < 2000; ++i) {
            CHECK(std::abs(testing::naive_norm(d.dictionary.atom(i)) - 1.0) <= 1e-12);
            CHECK(d.cluster_of[i] == i / 20);
            CHECK(testing::naive_dot(d.dictionary.atom(i), d.seeds.col(d.cluster_of[i])) >= 0.9 - 1e-12);
        }
    }
    SUBCASE("one atom per cluster gives the seeds") {
        ExperimentConfig c = small_config();
        c.atoms_per_cluster = 1;
        c.n = c.clusters;
        std::mt19937_64 rng(3);
        const ClusteredDictionary d = generate_clustered_dictionary(c, rng);
        CHECK(d.dictionary.atoms() == d.seeds);
    }
    SUBCASE("deterministic") {
        std::mt19937_64 a(11), b(11);
        CHECK(generate_clustered_dictionary(small_config(), a).dictionary.atoms() ==
              generate_clustered_dictionary(small_config(), b).dictionary.atoms());
    }
}

TEST_CASE("generate_observation") {
    std::mt19937_64 rng(13);
    ExperimentConfig c = small_config();
    const ClusteredDictionary d = generate_clustered_dictionary(c, rng);
    SUBCASE("k = 0") {
        c.sparsity = 0;
        const SyntheticObservation o = generate_observation(d.dictionary, c, rng);
        CHECK(o.observation.y == Vector(c.m, 0.0));
        CHECK(o.support.empty());
    }
    SUBCASE("k = 1 with a unit coefficient is one atom") {
        c.sparsity = 1;
        const SyntheticObservation o = generate_observation(d.dictionary, c, rng, true);
        const auto a = d.dictionary.atom(o.support[0]);
        CHECK(o.observation.y == Vector(a.begin(), a.end()));
    }
    SUBCASE("default sparsity") {
        ExperimentConfig full;
        std::mt19937_64 r2(17);
        const ClusteredDictionary big = generate_clustered_dictionary(full, r2);
        const SyntheticObservation o = generate_observation(big.dictionary, full, r2);
        CHECK(o.support.size() == 10);
        CHECK(std::set<std::size_t>(o.support.begin(), o.support.end()).size() == 10);
        CHECK(std::count(o.coefficients.begin(), o.coefficients.end(), 0.0) == 0);
    }
}

TEST_CASE("lambda grid and checkpoints") {
    const auto g = lambda_grid(2.0, 1.5, 30);
    CHECK(g.size() == 30);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == Approx(2.0 * std::pow(10.0, -1.5)).epsilon(1e-14));
    for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] / g[j - 1] == Approx(std::pow(10.0, -1.5 / 29)).epsilon(1e-13));
    CHECK(lambda_grid(1.0, 1.5, 1) == std::vector<double>{1.0});

    CHECK(iteration_checkpoints(10000) ==
          std::vector<std::size_t>{1, 2, 3, 6, 10, 18, 32, 56, 100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000});
    CHECK(iteration_checkpoints(1) == std::vector<std::size_t>{1});
    CHECK(iteration_checkpoints(50).back() == 50);
}

TEST_CASE("run_experiment on a small instance") {
    const ExperimentConfig c = small_config();
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.grids.size() == 4);
    CHECK(r.path.size() == c.lambda_grid_points);
    CHECK(r.audit.safety_violations == 0);
    CHECK(r.audit.dominance_violations == 0);
    CHECK(r.audit.radius_violations == 0);
    CHECK(r.audit.spheres_checked > 0);
    for (const LambdaRecord& rec : r.path) {
        CHECK(rec.converged);
        CHECK(rec.reference_gap <= c.reference_tolerance);
    }

    const DetectionGrid* standard = r.grid(Mode::standard);
    const DetectionGrid* hybrid = r.grid(Mode::hybrid);
    REQUIRE(standard);
    REQUIRE(hybrid);
    for (const DetectionGrid& g : r.grids) {
        CHECK(g.iterations == iteration_checkpoints(c.max_iters_per_lambda));
        CHECK(g.cells.size() == g.iterations.size() * g.lambdas.size());
        CHECK(g.neg_log10_ratio.front() == 0.0);
        for (std::size_t row = 0; row < g.iterations.size(); ++row) {
            // lambda_max column: every atom is a zero
            CHECK(g.cell(row, 0).true_zero_count == c.n);
            for (std::size_t col = 0; col < g.lambdas.size(); ++col) {
                const DetectionCell& cell = g.cell(row, col);
                CHECK(cell.detection_rate >= 0.0);
                CHECK(cell.detection_rate <= 1.0);
                CHECK(cell.detection_rate <= standard->cell(row, col).detection_rate);
                if (row > 0) CHECK(cell.detection_rate >= g.cell(row - 1, col).detection_rate);
            }
        }
    }
    // hybrid ends up with the standard mask
    for (std::size_t k = 0; k < standard->cells.size(); ++k)
        CHECK(hybrid->cells[k].screened_count == standard->cells[k].screened_count);

    for (const auto& [mode, stats] : r.invocations) {
        CAPTURE(to_string(mode));
        CHECK(stats.invocations > 0);
        if (mode == Mode::standard) {
            CHECK(stats.min_per_invocation == c.n);
            CHECK(stats.max_per_invocation == c.n);
        } else if (mode != Mode::hybrid) {
            CHECK(stats.min_per_invocation == c.clusters);
            CHECK(stats.max_per_invocation == c.clusters);
        }
    }
    CHECK(standard->cell(standard->iterations.size() - 1, 3).detection_rate > 0.5);
}

TEST_CASE("run_experiment is deterministic and the csv round-trips") {
    ExperimentConfig c = small_config();
    c.lambda_grid_points = 4;
    c.modes = {Mode::standard, Mode::sphere};
    const ExperimentResult a = run_experiment(c);
    const ExperimentResult b = run_experiment(c);
    std::ostringstream ca, cb;
    emit_csv(a.grids, ca);
    emit_csv(b.grids, cb);
    CHECK(ca.str() == cb.str());
    std::istringstream in(ca.str());
    CHECK(parse_csv(in) == a.grids);
}

TEST_CASE("emit_csv shapes") {
    std::ostringstream empty;
    emit_csv(std::span<const DetectionGrid>{}, empty);
    CHECK(empty.str() ==
          "mode,lambda,neg_log10_lambda_ratio,iteration,detection_rate,screened_count,true_zero_count,inner_products\n");

    const DetectionGrid one = toy_grid(1, 1, [](auto, auto) { return 0.25; });
    std::ostringstream out;
    emit_csv(std::span<const DetectionGrid>(&one, 1), out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.substr(text.find('\n') + 1) == "dome,1,0,1,0.25,0,1,0\n");

    std::istringstream bad("mode,lambda\n");
    CHECK_THROWS(parse_csv(bad));
}

TEST_CASE("emit_heatmap") {
    SUBCASE("uniform grids are solid, at opposite ends of the scale") {
        std::ostringstream zero, one;
        emit_heatmap(toy_grid(4, 5, [](auto, auto) { return 0.0; }), zero);
        emit_heatmap(toy_grid(4, 5, [](auto, auto) { return 1.0; }), one);
        const auto z = svg_cells(zero.str());
        const auto o = svg_cells(one.str());
        REQUIRE(z.size() == 20);
        REQUIRE(o.size() == 20);
        for (const auto& cell : z) CHECK(cell.fill == heatmap_color(0.0));
        for (const auto& cell : o) CHECK(cell.fill == heatmap_color(1.0));
        CHECK(heatmap_color(0.0) != heatmap_color(1.0));
        CHECK(zero.str().find("-log10(lambda / lambda_max)") != std::string::npos);
        CHECK(zero.str().find("log10(iterations)") != std::string::npos);
    }
    SUBCASE("monotone grid gives a monotone colour progression") {
        const std::size_t rows = 5, cols = 8;
        const DetectionGrid g = toy_grid(rows, cols, [&](std::size_t r, std::size_t c) {
            return static_cast<double>(r * cols + c) / static_cast<double>(rows * cols - 1);
        });
        std::ostringstream svg;
        emit_heatmap(g, svg);
        auto cells = svg_cells(svg.str());
        REQUIRE(cells.size() == rows * cols);
        std::sort(cells.begin(), cells.end(), [&](const SvgCell& a, const SvgCell& b) {
            return a.row * cols + a.col < b.row * cols + b.col;
        });
        for (std::size_t k = 1; k < cells.size(); ++k) CHECK(luminance(cells[k].fill) >= luminance(cells[k - 1].fill));
    }
    SUBCASE("colour map endpoints") {
        CHECK(heatmap_color(0.0) == "#440154");
        CHECK(heatmap_color(1.0) == "#fde725");
        CHECK(heatmap_color(-3.0) == heatmap_color(0.0));
        CHECK(heatmap_color(7.0) == heatmap_color(1.0));
    }
}
