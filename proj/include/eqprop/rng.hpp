// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace eqprop {

/// Purpose tags keep the random streams independent of each other.
enum class RngStream : std::uint32_t { Init = 1, BetaSign = 2, Shuffle = 3, Mask = 4, Sample = 5 };

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(extra),
                    static_cast<std::uint32_t>(extra >> 32)};
  return std::mt19937_64(seq);
}

} // namespace eqprop
