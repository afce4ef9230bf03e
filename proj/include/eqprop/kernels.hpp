// SPDX-License-Identifier: Apache-2.0
/**
 * @file kernels.hpp
 * @brief Data-parallel double-precision inner loops.
 *
 * Each kernel exists as a portable scalar reference and, on x86-64 builds, as
 * an AVX2/FMA variant. The variant is picked once at startup from CPUID; the
 * EQPROP_KERNELS environment variable ("scalar", "avx2", "auto") overrides it.
 * The two tables are interchangeable up to rounding: the vector dot product
 * reassociates its sum and the FMA forms skip one rounding.
 */
#pragma once

#include <cstddef>
#include <string_view>

namespace eqprop::kernels {

struct KernelTable {
  const char *name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double *a, const double *b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
  /// y[r] += sum_c A[r, c] * x[c]; A row-major rows x cols
  void (*gemv_acc)(const double *a, std::size_t rows, std::size_t cols,
                   const double *x, double *y);
  /// y[c] += sum_r A[r, c] * x[r]
  void (*gemv_t_acc)(const double *a, std::size_t rows, std::size_t cols,
                     const double *x, double *y);
  /// A[r, c] += alpha * u[r] * v[c]
  void (*ger)(double alpha, const double *u, std::size_t rows, const double *v,
              std::size_t cols, double *a);
};

const KernelTable &scalar_table() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks
/// AVX2/FMA.
const KernelTable *avx2_table() noexcept;

/// The table used by the numerics layer.
const KernelTable &active() noexcept;

/// Force a table by name ("scalar", "avx2", "auto"). Returns false when the
/// requested variant is unavailable; the active table is then unchanged.
bool select(std::string_view name) noexcept;

} // namespace eqprop::kernels
