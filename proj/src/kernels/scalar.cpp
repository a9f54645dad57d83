#include "kernels_impl.hpp"

namespace jscreen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t len) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* v,
                   double* out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = dot_scalar(a + j * rows, v, rows);
}

}  // namespace jscreen::kernels::detail
