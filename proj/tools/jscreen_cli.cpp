// jscreen: data generation, single solves, the lambda-path benchmark and the
// oracle verification suites.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jscreen/core.hpp"
#include "jscreen/harness.hpp"
#include "jscreen/solver.hpp"
#include "jscreen/verify.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace jscreen;

namespace {

enum Exit { kOk = 0, kUsage = 1, kVerifyFailed = 2, kNotConverged = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigFlags {
    std::string config_file;
    std::optional<std::size_t> m, n, clusters, sparsity, grid_points, max_iters;
    std::optional<double> coherence, decades, gap_tolerance;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
    app->add_option("--config", f.config_file, "JSON experiment config; flags override its values")
        ->check(CLI::ExistingFile);
    app->add_option("--m", f.m, "signal dimension");
    app->add_option("--n", f.n, "number of atoms");
    app->add_option("--clusters", f.clusters, "number of clusters (test vectors)");
    app->add_option("--coherence", f.coherence, "lower bound on atom/seed cosine");
    app->add_option("--sparsity", f.sparsity, "atoms in the synthetic observation");
    app->add_option("--decades", f.decades, "lambda range in decades below lambda_max");
    app->add_option("--grid-points", f.grid_points, "lambda values on the path");
    app->add_option("--max-iters", f.max_iters, "FISTA iterations per lambda");
    app->add_option("--gap-tolerance", f.gap_tolerance, "duality-gap stopping tolerance");
    app->add_option("--mode", f.mode, "standard, sphere, dome, hybrid or all");
    app->add_option("--seed", f.seed, "random seed");
    app->add_option("--out-dir", f.out_dir, "output directory");
}

harness::ExperimentConfig resolve_config(const ConfigFlags& f) {
    harness::ExperimentConfig c;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        nlohmann::json j;
        try {
            in >> j;
            harness::from_json(j, c);
        } catch (const std::exception& e) {
            throw UsageError("cannot read config " + f.config_file + ": " + e.what());
        }
        if (!j.contains("atoms_per_cluster") && c.clusters > 0) c.atoms_per_cluster = c.n / c.clusters;
    }
    if (f.m) c.m = *f.m;
    if (f.n) c.n = *f.n;
    if (f.clusters) c.clusters = *f.clusters;
    if ((f.n || f.clusters) && c.clusters > 0) c.atoms_per_cluster = c.n / c.clusters;
    if (f.coherence) c.seed_coherence = *f.coherence;
    if (f.sparsity) c.sparsity = *f.sparsity;
    if (f.decades) c.lambda_decades = *f.decades;
    if (f.grid_points) c.lambda_grid_points = *f.grid_points;
    if (f.max_iters) c.max_iters_per_lambda = *f.max_iters;
    if (f.gap_tolerance) c.gap_tolerance = *f.gap_tolerance;
    if (f.seed) c.rng_seed = *f.seed;
    if (f.mode) {
        nlohmann::json j{{"mode", *f.mode}};
        try {
            harness::from_json(j, c);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

struct Instance {
    harness::ClusteredDictionary data;
    Observation observation;
};

Instance make_instance(const harness::ExperimentConfig& config) {
    std::mt19937_64 rng(config.rng_seed);
    harness::ClusteredDictionary data = harness::generate_clustered_dictionary(config, rng);
    Observation y = harness::generate_observation(data.dictionary, config, rng).observation;
    return {std::move(data), std::move(y)};
}

int run_generate(const ConfigFlags& flags, const std::string& format) {
    const harness::ExperimentConfig config = resolve_config(flags);
    const Instance inst = make_instance(config);
    const fs::path dir = flags.out_dir;
    fs::create_directories(dir);
    const fs::path dict_path = dir / (format == "bin" ? "dictionary.bin" : "dictionary.csv");
    io::write_matrix(inst.data.dictionary.atoms(), dict_path);
    io::write_observation(inst.observation, dir / "observation.csv");
    io::write_csv(inst.data.seeds, dir / "seeds.csv");
    nlohmann::json j;
    harness::to_json(j, config);
    std::ofstream(dir / "config.json") << j.dump(2) << '\n';
    std::printf("wrote %s, observation.csv, seeds.csv, config.json to %s (m=%zu n=%zu)\n",
                dict_path.filename().c_str(), dir.c_str(), config.m, config.n);
    return kOk;
}

struct SolveFlags {
    std::string dictionary, observation, trace;
    std::optional<double> lambda;
    double lambda_ratio = 0.5;
};

int run_solve(const ConfigFlags& flags, const SolveFlags& s) {
    const harness::ExperimentConfig config = resolve_config(flags);
    if (s.dictionary.empty() != s.observation.empty())
        throw UsageError("--dictionary and --observation go together");
    std::optional<Dictionary> loaded;
    Observation y;
    if (!s.dictionary.empty()) {
        try {
            loaded.emplace(unit_normalize(io::read_matrix(s.dictionary)));
            y = io::read_observation(s.observation);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    std::optional<Instance> inst;
    if (!loaded) inst.emplace(make_instance(config));
    const Dictionary& dict = loaded ? *loaded : inst->data.dictionary;
    if (inst) y = inst->observation;
    if (y.y.size() != dict.m()) throw UsageError("observation length does not match the dictionary");

    const double lmax = lambda_max(dict, y);
    const double lambda = s.lambda ? *s.lambda : s.lambda_ratio * lmax;
    if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
    const Problem problem(dict, y, lambda);

    std::ofstream trace_file;
    std::optional<TraceWriter> trace;
    if (!s.trace.empty()) {
        trace_file.open(s.trace);
        if (!trace_file) throw UsageError("cannot open " + s.trace);
        trace.emplace(trace_file);
    }
    SolveOptions options;
    options.gap_tolerance = config.gap_tolerance;
    options.max_iters = config.max_iters_per_lambda;
    options.allow_nonconvergence = true;
    const SolveResult r = solve(problem, options, [&](IterationView& v) {
        if (trace) trace->row(v.state.iteration, v.gap, v.primal);
    });

    std::printf("lambda %.17g (lambda/lambda_max %.6g)\n", lambda, lambda / lmax);
    std::printf("iterations %zu, gap %.6g, objective %.17g\n", r.iterations, r.gap, primal_objective(problem, r.x));
    std::printf("support");
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < r.x.x.size(); ++i) {
        if (r.x.x[i] > 0.0) {
            std::printf(" %zu:%.10g", i, r.x.x[i]);
            ++nnz;
        }
    }
    std::printf("\nnonzeros %zu of %zu\n", nnz, r.x.x.size());
    if (!r.converged) {
        std::fprintf(stderr, "not converged: gap %.3g > %.3g after %zu iterations\n", r.gap, options.gap_tolerance,
                     r.iterations);
        return kNotConverged;
    }
    return kOk;
}

int run_bench(const ConfigFlags& flags) {
    const harness::ExperimentConfig config = resolve_config(flags);
    const harness::ExperimentResult result = harness::run_experiment(config);
    const fs::path dir = flags.out_dir;
    fs::create_directories(dir);
    harness::emit_csv(result.grids, dir / "detection.csv");
    for (const harness::DetectionGrid& g : result.grids)
        harness::emit_heatmap(g, dir / ("heatmap_" + std::string(harness::to_string(g.mode)) + ".svg"));

    std::size_t unconverged = 0;
    for (const auto& rec : result.path) unconverged += rec.converged ? 0 : 1;
    std::printf("lambda_max %.6g, %zu lambdas, %.1f s\n", result.lambda_max, result.path.size(), result.seconds);
    for (const harness::DetectionGrid& g : result.grids) {
        double last = 0.0;
        for (std::size_t col = 0; col < g.lambdas.size(); ++col) last += g.cell(g.iterations.size() - 1, col).detection_rate;
        std::printf("%-8s mean final detection rate %.3f\n", std::string(harness::to_string(g.mode)).c_str(),
                    g.lambdas.empty() ? 0.0 : last / static_cast<double>(g.lambdas.size()));
    }
    for (const auto& [mode, stats] : result.invocations) {
        std::printf("%-8s %llu invocations, %llu..%llu inner products each\n",
                    std::string(harness::to_string(mode)).c_str(), static_cast<unsigned long long>(stats.invocations),
                    static_cast<unsigned long long>(stats.invocations ? stats.min_per_invocation : 0),
                    static_cast<unsigned long long>(stats.max_per_invocation));
    }
    const harness::Audit& a = result.audit;
    std::printf("audit: %zu safety, %zu dominance, %zu tau>|c| violations over %zu spheres\n", a.safety_violations,
                a.dominance_violations, a.radius_violations, a.spheres_checked);
    std::printf("%zu of %zu lambdas stopped at the iteration cap\n", unconverged, result.path.size());
    std::printf("wrote detection.csv and heatmaps to %s\n", dir.c_str());
    if (a.safety_violations || a.dominance_violations || a.radius_violations) return kVerifyFailed;
    return kOk;
}

void report(const verify::CheckResult& r) {
    std::printf("%s  %-40s %7.1fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    std::fflush(stdout);
}

int run_verify(const ConfigFlags& flags, bool quick) {
    harness::ExperimentConfig config = resolve_config(flags);
    std::vector<verify::CheckResult> results;
    auto record = [&](verify::CheckResult r) {
        report(r);
        results.push_back(std::move(r));
    };

    verify::SafetyOptions safety;
    verify::RegionMaxOptions region;
    verify::ThresholdOptions threshold;
    verify::NestingOptions nesting;
    verify::AuxFunctionOptions aux;
    verify::IndexOptions index;
    if (quick) {
        safety.instances = 5;
        safety.lambdas = 5;
        region.pairs = 60;
        region.samples = 100'000;
        region.tolerance = 1e-2;
        threshold.cases = 100;
        nesting.sets = 60;
        nesting.samples = 5'000;
        aux.a_values = 20;
        index.instances = 20;
        if (flags.config_file.empty() && !flags.grid_points) config.lambda_grid_points = 4;
        if (flags.config_file.empty() && !flags.max_iters) config.max_iters_per_lambda = 300;
    }
    if (flags.seed) {
        safety.seed += *flags.seed;
        region.seed += *flags.seed;
        threshold.seed += *flags.seed;
        nesting.seed += *flags.seed;
        aux.seed += *flags.seed;
        index.seed += *flags.seed;
    }

    record(verify::check_safety(safety));
    record(verify::check_region_maxima(region));
    record(verify::check_thresholds(threshold));
    record(verify::check_dome_in_sphere(nesting));
    record(verify::check_aux_function(aux));
    record(verify::check_index_equivalence(index));

    config.modes.assign(std::begin(harness::kAllModes), std::end(harness::kAllModes));
    const harness::ExperimentResult run = harness::run_experiment(config);
    record(verify::check_radius_bound(run));
    record(verify::check_dominance(run));
    record(verify::check_complexity(config, run, {}));

    std::size_t failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::printf("%zu of %zu checks passed\n", results.size() - failed, results.size());
    return failed ? kVerifyFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint safe screening for the nonnegative LASSO"};
    app.require_subcommand(1);

    ConfigFlags gen_flags, solve_flags, bench_flags, verify_flags;
    std::string format = "csv";
    SolveFlags solve_opts;
    bool quick = false;

    CLI::App* gen = app.add_subcommand("generate", "write a clustered dictionary and observation");
    add_config_flags(gen, gen_flags);
    gen->add_option("--format", format, "dictionary file format")->check(CLI::IsMember({"csv", "bin"}));

    CLI::App* sol = app.add_subcommand("solve", "solve one nonnegative LASSO problem with FISTA");
    add_config_flags(sol, solve_flags);
    sol->add_option("--dictionary", solve_opts.dictionary, "dictionary file (.csv or .bin); columns are normalized")
        ->check(CLI::ExistingFile);
    sol->add_option("--observation", solve_opts.observation, "observation file (m x 1 csv or bin)")
        ->check(CLI::ExistingFile);
    auto* lambda_opt = sol->add_option("--lambda", solve_opts.lambda, "regularization weight");
    sol->add_option("--lambda-ratio", solve_opts.lambda_ratio, "lambda / lambda_max")
        ->excludes(lambda_opt)
        ->check(CLI::PositiveNumber);
    sol->add_option("--trace", solve_opts.trace, "write iteration,gap,objective rows here");

    CLI::App* bench = app.add_subcommand("bench", "run the lambda-path screening experiment");
    add_config_flags(bench, bench_flags);

    CLI::App* ver = app.add_subcommand("verify", "run the oracle suites and property checks");
    add_config_flags(ver, verify_flags);
    ver->add_flag("--quick", quick, "reduced sample sizes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return run_generate(gen_flags, format);
        if (sol->parsed()) return run_solve(solve_flags, solve_opts);
        if (bench->parsed()) return run_bench(bench_flags);
        if (ver->parsed()) return run_verify(verify_flags, quick);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNotConverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
