// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "eqprop/kernels.hpp"

namespace eqprop::kernels {

#if defined(EQPROP_HAVE_AVX2)
const KernelTable &avx2_table_unchecked() noexcept;
#endif

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(EQPROP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable *best_table() noexcept {
  if (const KernelTable *t = avx2_table())
    return t;
  return &scalar_table();
}

const KernelTable *initial_table() noexcept {
  if (const char *env = std::getenv("EQPROP_KERNELS")) {
    const std::string_view name(env);
    if (name == "scalar")
      return &scalar_table();
    if (name == "avx2" && avx2_table())
      return avx2_table();
  }
  return best_table();
}

std::atomic<const KernelTable *> &current() noexcept {
  static std::atomic<const KernelTable *> table{initial_table()};
  return table;
}

} // namespace

const KernelTable *avx2_table() noexcept {
#if defined(EQPROP_HAVE_AVX2)
  static const bool supported = cpu_has_avx2_fma();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable &active() noexcept {
  return *current().load(std::memory_order_relaxed);
}

bool select(std::string_view name) noexcept {
  const KernelTable *table = nullptr;
  if (name == "scalar")
    table = &scalar_table();
  else if (name == "avx2")
    table = avx2_table();
  else if (name == "auto")
    table = best_table();
  if (!table)
    return false;
  current().store(table, std::memory_order_relaxed);
  return true;
}

} // namespace eqprop::kernels
