// SPDX-License-Identifier: Apache-2.0
/**
 * @file model.hpp
 * @brief Layered convergent RNN: topology, weights, primitive function and
 *        one synchronous transition step.
 *
 * Layers are indexed from the output: layer 0 is the output, layer N the last
 * hidden layer (the one that sees the input). W_{n,n+1} maps layer n+1 into
 * layer n; W_{N,x} maps the input into layer N. With untied weights the
 * feedback matrices W_{n+1,n} are stored separately, otherwise every feedback
 * use reads W_{n,n+1}^T.
 *
 * Parameter blocks live in one vector with the layout
 *   [W_{0,1}, ..., W_{N-1,N}, W_{N,x}, W_{1,0}, ..., W_{N,N-1}]
 * the trailing feedback blocks being present only when untied. This order is
 * also the concatenation order for every flattened parameter comparison.
 */
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eqprop/numerics.hpp"

namespace eqprop {

enum class DynamicsMode { DiscreteTime, RealTime };

std::string_view to_string(DynamicsMode mode) noexcept;
DynamicsMode parse_mode(std::string_view name);

using ParamSet = std::vector<Matrix>;

struct LayeredNetwork {
  std::vector<std::size_t> layer_sizes; // d_0 (output) ... d_N
  std::size_t input_size = 0;
  bool tied = true;
  ActivationKind activation = ActivationKind::Tanh;
  DynamicsMode mode = DynamicsMode::DiscreteTime;
  /// Time-discretisation step of RealTime dynamics; ignored in DiscreteTime.
  double epsilon = 1.0;
  ParamSet params;

  /// Network with all weights zero. `layer_sizes` is output-first.
  static LayeredNetwork zeros(std::vector<std::size_t> layer_sizes, std::size_t input_size,
                              bool tied, ActivationKind activation, DynamicsMode mode,
                              double epsilon = 1.0);

  /// N, the number of hidden layers.
  std::size_t hidden_count() const noexcept { return layer_sizes.size() - 1; }
  std::size_t layer_count() const noexcept { return layer_sizes.size(); }

  Matrix &forward(std::size_t n) { return params[n]; }
  const Matrix &forward(std::size_t n) const { return params[n]; }
  Matrix &input_weights() { return params[hidden_count()]; }
  const Matrix &input_weights() const { return params[hidden_count()]; }
  /// W_{n+1,n}; untied networks only.
  Matrix &backward(std::size_t n) { return params[hidden_count() + 1 + n]; }
  const Matrix &backward(std::size_t n) const { return params[hidden_count() + 1 + n]; }

  std::size_t block_count() const noexcept { return params.size(); }
  /// "W0_1", "W1_x", "W1_0", ...
  std::string block_name(std::size_t block) const;
  /// Index of the learning rate that drives a block: eta_n for W_{n,n+1} and
  /// W_{n+1,n}, eta_N for W_{N,x}.
  std::size_t block_rate_index(std::size_t block) const noexcept;

  /// Throws ErrorCode::DimensionMismatch if any matrix disagrees with the
  /// topology.
  void validate() const;
};

struct NetworkState {
  std::vector<Vector> layers;

  static NetworkState zeros(const LayeredNetwork &net);

  std::size_t total_size() const noexcept;
  Vector flatten() const;
  bool finite() const noexcept;
  bool operator==(const NetworkState &) const = default;
};

/// Euclidean norm of a - b over all layers.
double state_distance(const NetworkState &a, const NetworkState &b);

struct Hyperparams {
  int T = 30;
  int K = 10;
  double beta = 0.1;
  double epsilon = 1.0;
  std::vector<double> lr_per_layer; // eta_n, output first
  bool random_beta = false;
  double lr_tiny_scale = 1e-5;
  double convergence_tol = 1e-6;

  /// Throws ErrorCode::InvalidArgument when an invariant is violated.
  void validate(DynamicsMode mode) const;
  /// Learning rate of a parameter block (zero when not configured).
  double rate_for_block(const LayeredNetwork &net, std::size_t block) const;
};

/// Precomputed input contribution W_{N,x} . x~ where x~ = x (DiscreteTime) or
/// sigma(x) (RealTime). Valid while W_{N,x} is unchanged.
Vector input_drive(const LayeredNetwork &net, std::span<const double> x);

/// x~: the input as seen by the weights.
Vector effective_input(const LayeredNetwork &net, std::span<const double> x);

/// The primitive function Phi. Tied networks only.
double primitive_phi(const LayeredNetwork &net, std::span<const double> x, const NetworkState &s);

/// One synchronous update of all layers (free dynamics, no nudging).
NetworkState transition_step(const LayeredNetwork &net, std::span<const double> x,
                             const NetworkState &s);

/// Same as transition_step with a cached input drive, writing into `out`.
void transition_into(const LayeredNetwork &net, std::span<const double> drive,
                     const NetworkState &s, NetworkState &out);

/// Pre-activations a^n of the DiscreteTime update (couplings before sigma).
/// In RealTime mode these are the couplings on sigma(s) multiplying epsilon.
std::vector<Vector> couplings(const LayeredNetwork &net, std::span<const double> drive,
                              const NetworkState &s);

/// The blockwise dPhi/dtheta terms that the EP-family updates difference:
/// s^n s^{n+1 T} and s^N x^T in DiscreteTime, the same on sigma(s) and
/// sigma(x) in RealTime. Tied layout (no feedback blocks).
ParamSet phi_param_terms(const LayeredNetwork &net, std::span<const double> x,
                         const NetworkState &s);

/// Single-matrix view of a tied network: s_flat = (s^0, ..., s^N),
/// transition pre-activation = W s_flat + Wx x,
/// Phi = 1/2 s^T W s + s^T Wx x.
struct CondensedForm {
  Matrix w;
  Matrix wx;
};
CondensedForm condensed_form(const LayeredNetwork &net);
double condensed_phi(const CondensedForm &form, std::span<const double> s_flat,
                     std::span<const double> x);

/// Untied copy whose feedback blocks equal the transposed forward blocks.
LayeredNetwork untie(const LayeredNetwork &tied_net);

/// Flattened concatenation of all parameter blocks in layout order.
Vector flatten(const ParamSet &params);
ParamSet zeros_like(const ParamSet &params);

void save_checkpoint(const LayeredNetwork &net, const std::filesystem::path &path);
LayeredNetwork load_checkpoint(const std::filesystem::path &path);

} // namespace eqprop
