#include "kernels_impl.hpp"

#if defined(JSCREEN_HAVE_NEON)
#include <arm_neon.h>

namespace jscreen::kernels::detail {

double dot_neon(const double* a, const double* b, std::size_t len) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t len) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < len; ++i) y[i] += alpha * x[i];
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* v,
                 double* out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = dot_neon(a + j * rows, v, rows);
}

}  // namespace jscreen::kernels::detail
#endif
