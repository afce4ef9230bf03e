// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace eqprop {

/// Worker count used by parallel_for (default 1). Results never depend on it:
/// callers write per-index outputs and reduce serially.
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

/// Calls fn(i) for i in [0, n), split into contiguous chunks across workers.
/// The first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

} // namespace eqprop
