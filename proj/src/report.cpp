#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "jscreen/harness.hpp"

namespace jscreen::harness {
namespace {

constexpr const char* kCsvHeader =
    "mode,lambda,neg_log10_lambda_ratio,iteration,detection_rate,screened_count,true_zero_count,"
    "inner_products";

std::string shortest(double v) {
    char buf[64];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

template <class T>
T parse_number(std::string_view token, std::size_t line) {
    T v{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::runtime_error("csv line " + std::to_string(line) + ": bad field '" +
                                 std::string(token) + "'");
    }
    return v;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Viridis sampled at nine evenly spaced stops.
constexpr std::array<std::array<double, 3>, 9> kViridis{{
    {68, 1, 84},
    {71, 44, 122},
    {59, 81, 139},
    {44, 113, 142},
    {33, 144, 141},
    {39, 173, 129},
    {92, 200, 99},
    {170, 220, 50},
    {253, 231, 37},
}};

}  // namespace

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> modes;
    for (Mode m : c.modes) modes.emplace_back(to_string(m));
    j = nlohmann::json{{"m", c.m},
                       {"n", c.n},
                       {"clusters", c.clusters},
                       {"atoms_per_cluster", c.atoms_per_cluster},
                       {"coherence", c.seed_coherence},
                       {"sparsity", c.sparsity},
                       {"decades", c.lambda_decades},
                       {"grid_points", c.lambda_grid_points},
                       {"max_iters", c.max_iters_per_lambda},
                       {"gap_tolerance", c.gap_tolerance},
                       {"seed", c.rng_seed},
                       {"modes", modes},
                       {"reference_tolerance", c.reference_tolerance},
                       {"prune_solver", c.prune_solver}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    auto take = [&j](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    take("m", c.m);
    take("n", c.n);
    take("clusters", c.clusters);
    take("atoms_per_cluster", c.atoms_per_cluster);
    take("coherence", c.seed_coherence);
    take("sparsity", c.sparsity);
    take("decades", c.lambda_decades);
    take("grid_points", c.lambda_grid_points);
    take("max_iters", c.max_iters_per_lambda);
    take("gap_tolerance", c.gap_tolerance);
    take("seed", c.rng_seed);
    take("reference_tolerance", c.reference_tolerance);
    take("prune_solver", c.prune_solver);
    if (j.contains("modes")) {
        c.modes.clear();
        for (const auto& name : j.at("modes")) c.modes.push_back(parse_mode(name.get<std::string>()));
    }
    if (j.contains("mode")) {
        const auto name = j.at("mode").get<std::string>();
        c.modes = name == "all" ? std::vector<Mode>(std::begin(kAllModes), std::end(kAllModes))
                                : std::vector<Mode>{parse_mode(name)};
    }
}

void emit_csv(std::span<const DetectionGrid> grids, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const DetectionGrid& g : grids) {
        for (std::size_t row = 0; row < g.iterations.size(); ++row) {
            for (std::size_t col = 0; col < g.lambdas.size(); ++col) {
                const DetectionCell& c = g.cell(row, col);
                out << to_string(g.mode) << ',' << shortest(g.lambdas[col]) << ','
                    << shortest(g.neg_log10_ratio[col]) << ',' << g.iterations[row] << ','
                    << shortest(c.detection_rate) << ',' << c.screened_count << ','
                    << c.true_zero_count << ',' << c.inner_products << '\n';
            }
        }
    }
}

void emit_csv(std::span<const DetectionGrid> grids, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    emit_csv(grids, out);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<DetectionGrid> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("csv: missing header");

    struct Row {
        double lambda, ratio;
        std::size_t iteration;
        DetectionCell cell;
    };
    std::vector<std::pair<Mode, std::vector<Row>>> by_mode;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<std::string_view, 8> f;
        std::string_view rest(line);
        for (std::size_t k = 0; k < f.size(); ++k) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (k + 1 == f.size())) {
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected 8 fields");
            }
            f[k] = rest.substr(0, comma);
            if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
        }
        const Mode mode = parse_mode(f[0]);
        Row r{parse_number<double>(f[1], lineno), parse_number<double>(f[2], lineno),
              parse_number<std::size_t>(f[3], lineno),
              DetectionCell{parse_number<double>(f[4], lineno), parse_number<std::size_t>(f[5], lineno),
                            parse_number<std::size_t>(f[6], lineno),
                            parse_number<std::uint64_t>(f[7], lineno)}};
        if (by_mode.empty() || by_mode.back().first != mode) by_mode.emplace_back(mode, std::vector<Row>{});
        by_mode.back().second.push_back(r);
    }

    std::vector<DetectionGrid> grids;
    for (auto& [mode, rows] : by_mode) {
        DetectionGrid g;
        g.mode = mode;
        for (const Row& r : rows) {
            if (r.iteration != rows.front().iteration) break;
            g.lambdas.push_back(r.lambda);
            g.neg_log10_ratio.push_back(r.ratio);
        }
        if (rows.size() % g.lambdas.size() != 0) throw std::runtime_error("csv: ragged grid");
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k % g.lambdas.size() == 0) g.iterations.push_back(rows[k].iteration);
            g.cells.push_back(rows[k].cell);
        }
        grids.push_back(std::move(g));
    }
    return grids;
}

std::vector<DetectionGrid> parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_csv(in);
}

std::string heatmap_color(double rate) {
    const double x = std::clamp(std::isfinite(rate) ? rate : 0.0, 0.0, 1.0) * (kViridis.size() - 1);
    const auto lo = std::min(static_cast<std::size_t>(x), kViridis.size() - 2);
    const double w = x - static_cast<double>(lo);
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k) {
        rgb[k] = static_cast<int>(std::lround((1.0 - w) * kViridis[lo][k] + w * kViridis[lo + 1][k]));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

void emit_heatmap(const DetectionGrid& grid, std::ostream& out) {
    constexpr int kCell = 18;
    constexpr int kLeft = 80;
    constexpr int kTop = 40;
    constexpr int kBottom = 70;
    constexpr int kBar = 60;
    const int cols = static_cast<int>(grid.lambdas.size());
    const int rows = static_cast<int>(grid.iterations.size());
    const int plot_w = cols * kCell;
    const int plot_h = rows * kCell;
    const int width = kLeft + plot_w + kBar + 40;
    const int height = kTop + std::max(plot_h, 100) + kBottom;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"13\">detection rate of zeros: "
        << to_string(grid.mode) << "</text>\n";

    // Row 0 (fewest iterations) sits at the bottom.
    for (int r = 0; r < rows; ++r) {
        const int y = kTop + (rows - 1 - r) * kCell;
        for (int c = 0; c < cols; ++c) {
            const double rate = grid.cell(static_cast<std::size_t>(r), static_cast<std::size_t>(c)).detection_rate;
            out << "<rect class=\"cell\" x=\"" << kLeft + c * kCell << "\" y=\"" << y << "\" width=\""
                << kCell << "\" height=\"" << kCell << "\" fill=\"" << heatmap_color(rate)
                << "\" data-row=\"" << r << "\" data-col=\"" << c << "\" data-rate=\"" << shortest(rate)
                << "\"/>\n";
        }
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", std::log10(static_cast<double>(grid.iterations[r])));
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + kCell - 5 << "\" text-anchor=\"end\">" << label
            << "</text>\n";
    }
    for (int c = 0; c < cols; c += std::max(1, cols / 6)) {
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", grid.neg_log10_ratio[c]);
        out << "<text x=\"" << kLeft + c * kCell + kCell / 2 << "\" y=\"" << kTop + plot_h + 14
            << "\" text-anchor=\"middle\">" << label << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kTop + plot_h + 40
        << "\" text-anchor=\"middle\">-log10(lambda / lambda_max)</text>\n";
    out << "<text transform=\"translate(20," << kTop + plot_h / 2
        << ") rotate(-90)\" text-anchor=\"middle\">log10(iterations)</text>\n";

    const int bar_x = kLeft + plot_w + 20;
    constexpr int kSteps = 20;
    const int step_h = std::max(plot_h, 100) / kSteps;
    for (int s = 0; s < kSteps; ++s) {
        const double rate = (s + 0.5) / kSteps;
        out << "<rect class=\"scale\" x=\"" << bar_x << "\" y=\"" << kTop + (kSteps - 1 - s) * step_h
            << "\" width=\"14\" height=\"" << step_h << "\" fill=\"" << heatmap_color(rate) << "\"/>\n";
    }
    out << "<text x=\"" << bar_x + 18 << "\" y=\"" << kTop + 10 << "\">1</text>\n";
    out << "<text x=\"" << bar_x + 18 << "\" y=\"" << kTop + kSteps * step_h << "\">0</text>\n";
    out << "</svg>\n";
}

void emit_heatmap(const DetectionGrid& grid, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    emit_heatmap(grid, out);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace jscreen::harness
