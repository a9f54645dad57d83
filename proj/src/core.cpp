#include "jscreen/core.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "jscreen/kernels.hpp"

namespace jscreen {
namespace {

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t rows, std::uint64_t cols) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(rows);
    mix(cols);
    for (double v : values) mix(std::bit_cast<std::uint64_t>(v));
    return h;
}

void require_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                             ", got " + std::to_string(got));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
    require_length(data_.size(), rows * cols, "matrix data");
}

Dictionary::Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
    if (atoms_.rows() == 0 || atoms_.cols() == 0) throw DimensionError("dictionary must be non-empty");
    for (std::size_t j = 0; j < atoms_.cols(); ++j) {
        const double norm = std::sqrt(kernels::scalar_table().dot(atoms_.col(j).data(),
                                                                  atoms_.col(j).data(), m()));
        if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
            throw DomainError("atom " + std::to_string(j) + " has norm " + std::to_string(norm));
        }
    }
    fingerprint_ = fnv1a(atoms_.data(), atoms_.rows(), atoms_.cols());
}

Problem::Problem(const Dictionary& dictionary, const Observation& observation, double lambda)
    : dictionary_(dictionary), observation_(observation), lambda_(lambda) {
    require_length(observation.y.size(), dictionary.m(), "observation");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
}

Dictionary unit_normalize(Matrix raw) {
    for (std::size_t j = 0; j < raw.cols(); ++j) {
        auto column = raw.col(j);
        double sq = 0.0;
        for (double v : column) sq += v * v;
        if (sq == 0.0) throw ZeroColumnError(j);
        const double norm = std::sqrt(sq);
        for (double& v : column) v /= norm;
    }
    return Dictionary(std::move(raw));
}

Vector residual(const Dictionary& dictionary, std::span<const double> y, std::span<const double> x) {
    require_length(y.size(), dictionary.m(), "y");
    require_length(x.size(), dictionary.n(), "x");
    Vector r(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) kernels::axpy(-x[i], dictionary.atom(i), r);
    }
    return r;
}

double primal_objective(const Dictionary& dictionary, std::span<const double> y,
                        std::span<const double> x, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    const Vector r = residual(dictionary, y, x);
    double l1 = 0.0;
    for (double v : x) l1 += std::abs(v);
    return 0.5 * kernels::squared_norm(r) + lambda * l1;
}

double primal_objective(const Problem& problem, const PrimalPoint& x) {
    return primal_objective(problem.dictionary(), problem.y(), x.x, problem.lambda());
}

double dual_objective(const Problem& problem, std::span<const double> theta) {
    const auto y = problem.y();
    require_length(theta.size(), y.size(), "theta");
    double yy = 0.0;
    double dd = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double d = y[k] - problem.lambda() * theta[k];
        yy += y[k] * y[k];
        dd += d * d;
    }
    return 0.5 * yy - 0.5 * dd;
}

double lambda_max(const Dictionary& dictionary, const Observation& observation) {
    require_length(observation.y.size(), dictionary.m(), "observation");
    Vector corr(dictionary.n());
    kernels::gemv_t(dictionary.atoms(), observation.y, corr);
    const double best = *std::max_element(corr.begin(), corr.end());
    if (!(best > 0.0)) throw NoActiveAtomError(best);
    return best;
}

double lambda_max_abs(const Dictionary& dictionary, const Observation& observation) {
    require_length(observation.y.size(), dictionary.m(), "observation");
    Vector corr(dictionary.n());
    kernels::gemv_t(dictionary.atoms(), observation.y, corr);
    double best = 0.0;
    for (double v : corr) best = std::max(best, std::abs(v));
    return best;
}

namespace io {
namespace {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(std::string_view token, std::size_t line) {
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
        token.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::runtime_error("line " + std::to_string(line) + ": bad number '" +
                                 std::string(token) + "'");
    }
    return v;
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated binary header");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

Matrix read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            row.push_back(parse_double(rest.substr(0, comma), lineno));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DimensionError("line " + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DimensionError(path.string() + ": empty matrix");
    Matrix out(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = rows[r][c];
    return out;
}

void write_csv(const Matrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            if (c) out << ',';
            out << format_double(matrix(r, c));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::uint64_t m = read_u64_le(in);
    const std::uint64_t n = read_u64_le(in);
    if (m == 0 || n == 0 || m > (1ULL << 32) || n > (1ULL << 32)) {
        throw DimensionError("implausible binary header");
    }
    std::vector<double> data(m * n);
    for (double& v : data) v = std::bit_cast<double>(read_u64_le(in));
    return Matrix(m, n, std::move(data));
}

void write_binary(const Matrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_u64_le(out, matrix.rows());
    write_u64_le(out, matrix.cols());
    for (double v : matrix.data()) write_u64_le(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
    return path.extension() == ".bin" ? read_binary(path) : read_csv(path);
}

void write_matrix(const Matrix& matrix, const std::filesystem::path& path) {
    if (path.extension() == ".bin") write_binary(matrix, path);
    else write_csv(matrix, path);
}

Observation read_observation(const std::filesystem::path& path) {
    const Matrix m = read_matrix(path);
    if (m.cols() != 1 && m.rows() != 1) throw DimensionError("observation must be a vector");
    return Observation{Vector(m.data().begin(), m.data().end())};
}

void write_observation(const Observation& observation, const std::filesystem::path& path) {
    write_matrix(Matrix(observation.y.size(), 1, observation.y), path);
}

}  // namespace io
}  // namespace jscreen
