#pragma once

// Dense arithmetic kernels behind a runtime-selected dispatch table.
//
// Every kernel has a portable scalar reference implementation; vectorized
// variants (AVX2+FMA on x86-64, NEON on AArch64) are picked at first use
// when the CPU supports them. The JSCREEN_KERNELS environment variable
// ("scalar", "avx2", "neon") forces a particular table.

#include <cstddef>
#include <span>
#include <string_view>

#include "jscreen/matrix.hpp"

namespace jscreen::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    const char* name;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t len);
    /// y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t len);
    /// out[j] = <A[:, j], v> for a column-major rows x cols block
    void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* v,
                   double* out);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// Table in use by the free functions below.
const KernelTable& active() noexcept;
/// Force a table; returns false (and leaves the selection alone) if unavailable.
bool select(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) {
    return active().dot(a.data(), a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

/// out = A^T v
inline void gemv_t(const Matrix& a, std::span<const double> v, std::span<double> out) {
    active().gemv_t(a.data().data(), a.rows(), a.cols(), v.data(), out.data());
}

}  // namespace jscreen::kernels
