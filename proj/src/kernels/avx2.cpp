// Compiled with -mavx2 -mfma; only reached through the dispatch table after a
// cpuid check.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace jscreen::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t len) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= len; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= len) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t len) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < len; ++i) y[i] += alpha * x[i];
}

// Four columns per pass so each load of v feeds four FMAs.
void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols, const double* v,
                 double* out) {
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
        const double* c0 = a + j * rows;
        const double* c1 = c0 + rows;
        const double* c2 = c1 + rows;
        const double* c3 = c2 + rows;
        __m256d s0 = _mm256_setzero_pd();
        __m256d s1 = _mm256_setzero_pd();
        __m256d s2 = _mm256_setzero_pd();
        __m256d s3 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            const __m256d vv = _mm256_loadu_pd(v + i);
            s0 = _mm256_fmadd_pd(_mm256_loadu_pd(c0 + i), vv, s0);
            s1 = _mm256_fmadd_pd(_mm256_loadu_pd(c1 + i), vv, s1);
            s2 = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), vv, s2);
            s3 = _mm256_fmadd_pd(_mm256_loadu_pd(c3 + i), vv, s3);
        }
        double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
        for (; i < rows; ++i) {
            r0 += c0[i] * v[i];
            r1 += c1[i] * v[i];
            r2 += c2[i] * v[i];
            r3 += c3[i] * v[i];
        }
        out[j] = r0;
        out[j + 1] = r1;
        out[j + 2] = r2;
        out[j + 3] = r3;
    }
    for (; j < cols; ++j) out[j] = dot_avx2(a + j * rows, v, rows);
}

}  // namespace jscreen::kernels::detail
