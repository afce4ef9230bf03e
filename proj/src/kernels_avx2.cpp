// SPDX-License-Identifier: Apache-2.0
// AVX2 + FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; it must not be entered unless the CPU reports both.

#include <immintrin.h>

#include "eqprop/kernels.hpp"

namespace eqprop::kernels {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double *a, const double *b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i)
    acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double *x, double *y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i)
    y[i] += alpha * x[i];
}

void gemv_acc_avx2(const double *a, std::size_t rows, std::size_t cols,
                   const double *x, double *y) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] += dot_avx2(a + r * cols, x, cols);
}

void gemv_t_acc_avx2(const double *a, std::size_t rows, std::size_t cols,
                     const double *x, double *y) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0)
      axpy_avx2(x[r], a + r * cols, y, cols);
  }
}

void ger_avx2(double alpha, const double *u, std::size_t rows, const double *v,
              std::size_t cols, double *a) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * u[r];
    if (s != 0.0)
      axpy_avx2(s, v, a + r * cols, cols);
  }
}

} // namespace

const KernelTable &avx2_table_unchecked() noexcept {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, gemv_acc_avx2,
                                 gemv_t_acc_avx2, ger_avx2};
  return table;
}

} // namespace eqprop::kernels
