#include "jscreen/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "jscreen/kernels.hpp"
#include "jscreen/oracle.hpp"
#include "jscreen/solver.hpp"

namespace jscreen::harness {
namespace {

constexpr double kRadiusSlack = 1e-12;

Vector gaussian_unit(std::mt19937_64& rng, std::size_t m, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (;;) {
        Vector v(m);
        for (double& e : v) e = normal(rng);
        const double norm = std::sqrt(kernels::scalar_table().dot(v.data(), v.data(), m));
        if (norm > 0.0) {
            for (double& e : v) e /= norm;
            return v;
        }
    }
}

// Per-mode accumulated state at one lambda.
struct ModeTrack {
    Mode mode;
    ScreenMask accumulated;
    std::uint64_t inner_products = 0;
    InvocationStats stats;
};

DetectionCell make_cell(const ScreenMask& mask, const std::vector<std::uint8_t>& zeros,
                        std::size_t zero_count, std::uint64_t inner_products) {
    DetectionCell cell;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < zeros.size(); ++i) hits += (mask.screened[i] && zeros[i]) ? 1 : 0;
    cell.screened_count = mask.count();
    cell.true_zero_count = zero_count;
    cell.detection_rate = zero_count ? static_cast<double>(hits) / static_cast<double>(zero_count) : 0.0;
    cell.inner_products = inner_products;
    return cell;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::standard: return "standard";
        case Mode::sphere: return "sphere";
        case Mode::dome: return "dome";
        case Mode::hybrid: return "hybrid";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    for (Mode m : kAllModes)
        if (to_string(m) == name) return m;
    throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    if (m == 0 || n == 0) throw std::invalid_argument("m and n must be positive");
    if (clusters == 0 || atoms_per_cluster == 0 || clusters * atoms_per_cluster != n) {
        throw std::invalid_argument("clusters * atoms_per_cluster must equal n");
    }
    if (!(seed_coherence > 0.0 && seed_coherence < 1.0)) {
        throw std::invalid_argument("coherence must lie in (0, 1)");
    }
    if (sparsity > n) throw std::invalid_argument("sparsity exceeds n");
    if (lambda_grid_points == 0) throw std::invalid_argument("lambda grid is empty");
    if (!(lambda_decades >= 0.0)) throw std::invalid_argument("decades must be nonnegative");
    if (max_iters_per_lambda == 0) throw std::invalid_argument("max iterations must be positive");
    if (!(gap_tolerance > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
    if (!(reference_tolerance >= 1e-14)) throw std::invalid_argument("reference tolerance below 1e-14");
    if (modes.empty()) throw std::invalid_argument("no screening mode selected");
}

ClusteredDictionary generate_clustered_dictionary(const ExperimentConfig& config, std::mt19937_64& rng) {
    config.validate();
    const std::size_t m = config.m;
    const std::size_t per = config.atoms_per_cluster;
    std::uniform_real_distribution<double> cosine(config.seed_coherence, 1.0);
    std::normal_distribution<double> normal;

    Matrix seeds(m, config.clusters);
    Matrix atoms(m, config.n);
    std::vector<std::size_t> cluster_of(config.n);
    for (std::size_t l = 0; l < config.clusters; ++l) {
        const Vector seed = gaussian_unit(rng, m, 1.0 / std::sqrt(static_cast<double>(m)));
        std::copy(seed.begin(), seed.end(), seeds.col(l).begin());
        for (std::size_t k = 0; k < per; ++k) {
            const std::size_t col = l * per + k;
            cluster_of[col] = l;
            auto a = atoms.col(col);
            if (k == 0 || m == 1) {
                std::copy(seed.begin(), seed.end(), a.begin());
                continue;
            }
            // u uniform on the unit sphere of span(seed)^perp
            Vector u(m);
            double un = 0.0;
            while (un < 1e-12) {
                for (double& e : u) e = normal(rng);
                double proj = 0.0;
                for (std::size_t d = 0; d < m; ++d) proj += u[d] * seed[d];
                for (std::size_t d = 0; d < m; ++d) u[d] -= proj * seed[d];
                un = 0.0;
                for (double e : u) un += e * e;
                un = std::sqrt(un);
            }
            const double c = cosine(rng);
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            double norm = 0.0;
            for (std::size_t d = 0; d < m; ++d) {
                a[d] = c * seed[d] + s * u[d] / un;
                norm += a[d] * a[d];
            }
            norm = std::sqrt(norm);
            for (double& e : a) e /= norm;
        }
    }
    return ClusteredDictionary{Dictionary(std::move(atoms)), std::move(seeds), std::move(cluster_of)};
}

SyntheticObservation generate_observation(const Dictionary& dictionary, const ExperimentConfig& config,
                                          std::mt19937_64& rng, bool unit_coefficients) {
    const std::size_t n = dictionary.n();
    if (config.sparsity > n) throw std::invalid_argument("sparsity exceeds n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < config.sparsity; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    SyntheticObservation out;
    out.support.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(config.sparsity));
    std::sort(out.support.begin(), out.support.end());
    std::normal_distribution<double> normal;
    out.observation.y.assign(dictionary.m(), 0.0);
    for (std::size_t idx : out.support) {
        const double coef = unit_coefficients ? 1.0 : normal(rng);
        out.coefficients.push_back(coef);
        const auto a = dictionary.atom(idx);
        for (std::size_t d = 0; d < a.size(); ++d) out.observation.y[d] += coef * a[d];
    }
    return out;
}

std::vector<double> lambda_grid(double lambda_max, double decades, std::size_t points) {
    std::vector<double> grid(points);
    for (std::size_t j = 0; j < points; ++j) {
        const double frac = points > 1 ? static_cast<double>(j) / static_cast<double>(points - 1) : 0.0;
        grid[j] = j == 0 ? lambda_max : lambda_max * std::pow(10.0, -decades * frac);
    }
    return grid;
}

std::vector<std::size_t> iteration_checkpoints(std::size_t max_iters) {
    std::vector<std::size_t> rows;
    for (int k = 0;; ++k) {
        const auto v = static_cast<std::size_t>(std::llround(std::pow(10.0, k / 4.0)));
        if (v >= max_iters) break;
        if (rows.empty() || rows.back() != v) rows.push_back(v);
    }
    rows.push_back(max_iters);
    return rows;
}

const DetectionGrid* ExperimentResult::grid(Mode mode) const {
    for (const auto& g : grids)
        if (g.mode == mode) return &g;
    return nullptr;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.rng_seed);
    const ClusteredDictionary data = generate_clustered_dictionary(config, rng);
    // Redraw the (measure-zero in practice) observations with no positive correlation.
    for (int attempt = 0;; ++attempt) {
        SyntheticObservation obs = generate_observation(data.dictionary, config, rng);
        try {
            (void)lambda_max(data.dictionary, obs.observation);
        } catch (const NoActiveAtomError&) {
            if (attempt < 100) continue;
            throw;
        }
        return run_experiment(config, data, obs.observation);
    }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ClusteredDictionary& data,
                                const Observation& observation) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const Dictionary& dict = data.dictionary;
    const std::size_t n = dict.n();

    ExperimentResult result;
    result.lambda_max = lambda_max(dict, observation);
    const std::vector<double> lambdas = lambda_grid(result.lambda_max, config.lambda_decades,
                                                    config.lambda_grid_points);
    const std::vector<std::size_t> rows = iteration_checkpoints(config.max_iters_per_lambda);

    std::vector<GroupIndex> indices;
    indices.reserve(data.seeds.cols());
    for (std::size_t l = 0; l < data.seeds.cols(); ++l) indices.push_back(build_group_index(dict, data.seeds.col(l)));

    for (Mode mode : config.modes) {
        DetectionGrid g;
        g.mode = mode;
        g.lambdas = lambdas;
        for (double l : lambdas) g.neg_log10_ratio.push_back(0.0 - std::log10(l / result.lambda_max));
        g.iterations = rows;
        g.cells.resize(rows.size() * lambdas.size());
        result.grids.push_back(std::move(g));
        result.invocations.emplace_back(mode, InvocationStats{});
    }
    const bool has_standard =
        std::find(config.modes.begin(), config.modes.end(), Mode::standard) != config.modes.end();

    const double step = default_step_size(dict);
    PrimalPoint warm{Vector(n, 0.0)};
    PrimalPoint reference_warm{Vector(n, 0.0)};

    for (std::size_t col = 0; col < lambdas.size(); ++col) {
        const Problem problem(dict, observation, lambdas[col]);
        const oracle::ReferenceSolution reference =
            oracle::reference_solve(problem, config.reference_tolerance, reference_warm);
        std::vector<std::uint8_t> zeros(n, 0);
        std::size_t zero_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (reference.x.x[i] <= kZeroThreshold) {
                zeros[i] = 1;
                ++zero_count;
            }
        }

        std::vector<ModeTrack> tracks;
        for (Mode mode : config.modes) tracks.push_back(ModeTrack{mode, ScreenMask(n), 0, {}});
        std::size_t invocation = 0;
        std::size_t next_row = 0;
        const bool below_max = col > 0 && lambdas[col] < result.lambda_max;

        auto record_row = [&](std::size_t row) {
            for (std::size_t t = 0; t < tracks.size(); ++t) {
                result.grids[t].cell(row, col) =
                    make_cell(tracks[t].accumulated, zeros, zero_count, tracks[t].inner_products);
            }
        };

        auto callback = [&](IterationView& view) {
            ++invocation;
            const SafeSphere& sphere = view.sphere;
            if (below_max) {
                const double excess = sphere.tau - std::sqrt(kernels::squared_norm(sphere.center));
                ++result.audit.spheres_checked;
                result.audit.max_tau_excess = std::max(result.audit.max_tau_excess, excess);
                if (excess > kRadiusSlack) ++result.audit.radius_violations;
            }
            std::optional<ScreenMask> standard_now;
            std::optional<ScreenMask> dome_now;
            for (ModeTrack& track : tracks) {
                ScreenMask now;
                switch (track.mode) {
                    case Mode::standard:
                        now = standard_screen(dict, sphere);
                        standard_now = now;
                        break;
                    case Mode::sphere: now = joint_screen_all(indices, sphere, JointMode::sphere); break;
                    case Mode::dome:
                        now = joint_screen_all(indices, sphere, JointMode::dome);
                        dome_now = now;
                        break;
                    case Mode::hybrid:
                        if (standard_now && dome_now && dome_now->size() == n) {
                            // Same outcome as hybrid_screen: the survivors' standard
                            // tests were already evaluated this iteration.
                            now = *dome_now;
                            for (std::size_t i = 0; i < n; ++i) {
                                if (now.screened[i]) continue;
                                now.screened[i] = standard_now->screened[i];
                                ++now.inner_product_count;
                            }
                        } else {
                            now = hybrid_screen(dict, indices, sphere, JointMode::dome);
                        }
                        break;
                }
                if (now.size() == 0) now.screened.assign(n, 0);
                result.audit.skipped_dome_tests += now.skipped_tests;
                for (std::size_t i = 0; i < n; ++i) {
                    if (now.screened[i] && !zeros[i]) ++result.audit.safety_violations;
                }
                track.inner_products += now.inner_product_count;
                track.stats.invocations += 1;
                track.stats.inner_products += now.inner_product_count;
                track.stats.min_per_invocation = std::min(track.stats.min_per_invocation, now.inner_product_count);
                track.stats.max_per_invocation = std::max(track.stats.max_per_invocation, now.inner_product_count);
                track.accumulated.merge(now);
                track.accumulated.inner_product_count = 0;
                track.accumulated.skipped_tests = 0;
                if (config.prune_solver) {
                    for (std::size_t i = 0; i < n; ++i) view.exclusion[i] |= now.screened[i];
                }
            }
            if (has_standard) {
                const ModeTrack* std_track = nullptr;
                for (const ModeTrack& t : tracks)
                    if (t.mode == Mode::standard) std_track = &t;
                for (const ModeTrack& t : tracks) {
                    if (t.mode == Mode::sphere || t.mode == Mode::dome) {
                        if (!t.accumulated.subset_of(std_track->accumulated)) ++result.audit.dominance_violations;
                    }
                }
            }
            while (next_row < rows.size() && rows[next_row] == invocation) record_row(next_row++);
        };

        SolveOptions options;
        options.gap_tolerance = config.gap_tolerance;
        options.max_iters = config.max_iters_per_lambda;
        options.x0 = warm;
        options.step_size = step;
        options.allow_nonconvergence = true;
        const SolveResult solved = solve(problem, options, callback);
        while (next_row < rows.size()) record_row(next_row++);

        for (std::size_t t = 0; t < tracks.size(); ++t) {
            InvocationStats& total = result.invocations[t].second;
            const InvocationStats& s = tracks[t].stats;
            total.invocations += s.invocations;
            total.inner_products += s.inner_products;
            total.min_per_invocation = std::min(total.min_per_invocation, s.min_per_invocation);
            total.max_per_invocation = std::max(total.max_per_invocation, s.max_per_invocation);
        }
        result.path.push_back(LambdaRecord{lambdas[col], solved.converged, solved.iterations, solved.gap,
                                           reference.gap, zero_count});
        warm = solved.x;
        reference_warm = reference.x;
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace jscreen::harness
