// SPDX-License-Identifier: Apache-2.0
// Small helpers shared by the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "eqprop/model.hpp"
#include "eqprop/rng.hpp"

namespace eqprop::testing {

inline LayeredNetwork random_net(std::vector<std::size_t> layers, std::size_t input, bool tied,
                                 ActivationKind act, DynamicsMode mode, double scale,
                                 std::uint64_t seed, double epsilon = 1.0) {
  LayeredNetwork net = LayeredNetwork::zeros(std::move(layers), input, tied, act, mode, epsilon);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto &m : net.params)
    for (double &w : m.flat())
      w = u(rng);
  return net;
}

inline Vector random_vector(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (double &x : v)
    x = u(rng);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const NetworkState &a, const NetworkState &b) {
  return max_abs_diff(a.flatten(), b.flatten());
}

inline double max_abs_diff(const ParamSet &a, const ParamSet &b) {
  return max_abs_diff(flatten(a), flatten(b));
}

inline double rel_error(std::span<const double> got, std::span<const double> want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num / den);
}

} // namespace eqprop::testing
