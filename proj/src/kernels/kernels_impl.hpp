#pragma once

#include <cstddef>

namespace jscreen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t len);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t len);
void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* v,
                   double* out);

#if defined(JSCREEN_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t len);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t len);
void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
#endif

#if defined(JSCREEN_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t len);
void axpy_neon(double alpha, const double* x, double* y, std::size_t len);
void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
#endif

}  // namespace jscreen::kernels::detail
