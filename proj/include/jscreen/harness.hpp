#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "jscreen/core.hpp"
#include "jscreen/screening.hpp"
#include "json.hpp"

namespace jscreen::harness {

enum class Mode { standard, sphere, dome, hybrid };

std::string_view to_string(Mode mode) noexcept;
/// Throws std::invalid_argument for unknown names.
Mode parse_mode(std::string_view name);
inline constexpr Mode kAllModes[] = {Mode::standard, Mode::sphere, Mode::dome, Mode::hybrid};

/// Coefficients at or below this are treated as zeros of the reference solution.
inline constexpr double kZeroThreshold = 1e-7;

struct ExperimentConfig {
    std::size_t m = 100;
    std::size_t n = 2000;
    std::size_t clusters = 100;
    std::size_t atoms_per_cluster = 20;
    double seed_coherence = 0.9;
    std::size_t sparsity = 10;
    double lambda_decades = 1.5;
    std::size_t lambda_grid_points = 30;
    std::size_t max_iters_per_lambda = 10000;
    double gap_tolerance = 1e-8;
    std::uint64_t rng_seed = 0;
    std::vector<Mode> modes{Mode::standard, Mode::sphere, Mode::dome, Mode::hybrid};
    /// Duality-gap target for the per-lambda ground truth.
    double reference_tolerance = 1e-12;
    /// Pin screened coordinates at zero inside FISTA.
    bool prune_solver = true;

    /// Throws std::invalid_argument on clusters * atoms_per_cluster != n,
    /// coherence outside (0, 1), sparsity > n, or an empty grid.
    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
/// Missing keys keep their current value.
void from_json(const nlohmann::json& j, ExperimentConfig& config);

struct ClusteredDictionary {
    Dictionary dictionary;
    Matrix seeds;                    // m x L, unit columns
    std::vector<std::size_t> cluster_of;  // atom -> cluster
};

/// L seeds drawn from N(0, I/m) and normalized; each cluster is its seed
/// followed by atoms_per_cluster - 1 unit vectors cos(phi) seed + sin(phi) u
/// with cos(phi) ~ U[coherence, 1] and u uniform on the seed's orthogonal
/// complement. Clusters occupy contiguous columns.
ClusteredDictionary generate_clustered_dictionary(const ExperimentConfig& config, std::mt19937_64& rng);

struct SyntheticObservation {
    Observation observation;
    std::vector<std::size_t> support;  // sorted
    Vector coefficients;               // aligned with support
};

/// y = A x_true, x_true supported on `sparsity` distinct uniformly chosen
/// atoms with N(0, 1) coefficients (all +1 with unit_coefficients).
SyntheticObservation generate_observation(const Dictionary& dictionary, const ExperimentConfig& config,
                                          std::mt19937_64& rng, bool unit_coefficients = false);

/// lambda_max * 10^(-decades * j / (points - 1)), j = 0 .. points - 1.
std::vector<double> lambda_grid(double lambda_max, double decades, std::size_t points);

/// round(10^(k/4)) for k = 0, 1, ... deduplicated, capped by and ending at max_iters.
std::vector<std::size_t> iteration_checkpoints(std::size_t max_iters);

struct DetectionCell {
    double detection_rate = 0.0;
    std::size_t screened_count = 0;
    std::size_t true_zero_count = 0;
    std::uint64_t inner_products = 0;  // cumulative at this lambda

    friend bool operator==(const DetectionCell&, const DetectionCell&) = default;
};

/// Rows are iteration checkpoints (screening invocations), columns lambda values.
struct DetectionGrid {
    Mode mode = Mode::standard;
    std::vector<double> lambdas;
    std::vector<double> neg_log10_ratio;
    std::vector<std::size_t> iterations;
    std::vector<DetectionCell> cells;  // row-major

    DetectionCell& cell(std::size_t row, std::size_t col) { return cells[row * lambdas.size() + col]; }
    const DetectionCell& cell(std::size_t row, std::size_t col) const {
        return cells[row * lambdas.size() + col];
    }

    friend bool operator==(const DetectionGrid&, const DetectionGrid&) = default;
};

struct LambdaRecord {
    double lambda = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double final_gap = 0.0;
    double reference_gap = 0.0;
    std::size_t reference_zeros = 0;
};

struct InvocationStats {
    std::uint64_t invocations = 0;
    std::uint64_t inner_products = 0;
    std::uint64_t min_per_invocation = UINT64_MAX;
    std::uint64_t max_per_invocation = 0;
};

struct Audit {
    std::size_t safety_violations = 0;     // screened atom with reference coefficient > kZeroThreshold
    std::size_t dominance_violations = 0;  // joint mask not inside standard mask
    std::size_t spheres_checked = 0;       // spheres emitted with lambda < lambda_max
    std::size_t radius_violations = 0;     // tau > ||c|| + 1e-12 among those
    double max_tau_excess = -1e300;        // max(tau - ||c||) among those
    std::uint64_t skipped_dome_tests = 0;
};

struct ExperimentResult {
    double lambda_max = 0.0;
    std::vector<DetectionGrid> grids;  // one per configured mode, same order
    std::vector<LambdaRecord> path;
    std::vector<std::pair<Mode, InvocationStats>> invocations;
    Audit audit;
    double seconds = 0.0;

    const DetectionGrid* grid(Mode mode) const;
};

/// Generates the dictionary and observation from config.rng_seed, then runs the path.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Runs the lambda path on given data; test vectors are the cluster seeds.
/// Throws NoActiveAtomError when max_i <a_i, y> <= 0.
ExperimentResult run_experiment(const ExperimentConfig& config, const ClusteredDictionary& data,
                                const Observation& observation);

/// Columns: mode,lambda,neg_log10_lambda_ratio,iteration,detection_rate,
/// screened_count,true_zero_count,inner_products. Shortest round-trip decimals.
void emit_csv(std::span<const DetectionGrid> grids, std::ostream& out);
void emit_csv(std::span<const DetectionGrid> grids, const std::filesystem::path& path);
std::vector<DetectionGrid> parse_csv(std::istream& in);
std::vector<DetectionGrid> parse_csv(const std::filesystem::path& path);

/// Heatmap of detection rates: -log10(lambda/lambda_max) on the horizontal
/// axis, log10 iterations on the vertical axis, viridis colours over [0, 1].
void emit_heatmap(const DetectionGrid& grid, std::ostream& out);
void emit_heatmap(const DetectionGrid& grid, const std::filesystem::path& path);

/// "#rrggbb" for a rate in [0, 1].
std::string heatmap_color(double rate);

}  // namespace jscreen::harness
