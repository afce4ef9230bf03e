// SPDX-License-Identifier: Apache-2.0
// Portable reference kernels. Every other variant is tested against these.

#include "eqprop/kernels.hpp"

namespace eqprop::kernels {
namespace {

double dot_scalar(const double *a, const double *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

void gemv_acc_scalar(const double *a, std::size_t rows, std::size_t cols,
                     const double *x, double *y) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] += dot_scalar(a + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double *a, std::size_t rows, std::size_t cols,
                       const double *x, double *y) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0)
      axpy_scalar(x[r], a + r * cols, y, cols);
  }
}

void ger_scalar(double alpha, const double *u, std::size_t rows, const double *v,
                std::size_t cols, double *a) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * u[r];
    if (s != 0.0)
      axpy_scalar(s, v, a + r * cols, cols);
  }
}

} // namespace

const KernelTable &scalar_table() noexcept {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar,
                                 gemv_acc_scalar, gemv_t_acc_scalar, ger_scalar};
  return table;
}

} // namespace eqprop::kernels
