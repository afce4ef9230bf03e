// SPDX-License-Identifier: Apache-2.0
/**
 * @file gradients.hpp
 * @brief BPTT and RBP gradient series of the loss l = 1/2 |y - s^0|^2, and
 *        finite-difference oracles for both.
 *
 * Jacobian-vector products are hand-derived for the layered transition and
 * include sigma' of the actual dynamics.
 *
 * Indexing. state_grads[t] = grad_s(t) for t = 0..K with grad_s(0) = dl/ds at
 * the anchoring state. param_grads[k] (k = 0..K-1) is the parameter gradient
 * produced by the k-th backward step,
 *
 *   param_grads[k] = (dF/dtheta at s_{T-k-1})^T grad_s(k)
 *
 * which is the entry the normalised update Delta_theta(k) is compared to.
 * Summed over k = 0..T-1 it is dL/dtheta for L = l(s_T).
 */
#pragma once

#include <span>
#include <vector>

#include "eqprop/model.hpp"
#include "eqprop/phases.hpp"

namespace eqprop {

enum class GradAlgorithm { BPTT, RBP };

std::string_view to_string(GradAlgorithm algo) noexcept;

struct GradientSeries {
  GradAlgorithm algorithm = GradAlgorithm::BPTT;
  std::vector<NetworkState> state_grads; // K + 1 entries
  std::vector<ParamSet> param_grads;     // K entries
  /// Norm of the last parameter gradient (all blocks).
  double tail_norm = 0.0;
};

double loss(const NetworkState &s, std::span<const double> y);

/// dl/ds: s^0 - y on the output layer, zero elsewhere.
NetworkState loss_state_grad(const NetworkState &s, std::span<const double> y);

/// Everything the transition's vector-Jacobian products need at one state.
struct Linearization {
  std::vector<Vector> pre;  // s (DiscreteTime) or sigma(s) (RealTime)
  std::vector<Vector> gain; // sigma'(a) (DiscreteTime) or sigma'(s) (RealTime)
  Vector x_eff;
};

Linearization linearize(const LayeredNetwork &net, std::span<const double> x,
                        const NetworkState &s);

/// (dF/ds)^T g at the linearisation point.
NetworkState vjp_state(const LayeredNetwork &net, const Linearization &lin, const NetworkState &g);

/// (dF/dtheta)^T g at the linearisation point, one matrix per block.
ParamSet vjp_params(const LayeredNetwork &net, const Linearization &lin, const NetworkState &g);

/// BPTT over the last K steps of a recorded free phase. Throws
/// InvalidArgument when K exceeds T.
GradientSeries bptt_gradients(const LayeredNetwork &net, std::span<const double> x,
                              const Trajectory &traj, std::span<const double> y, int K);

/// RBP: the BPTT recurrences with every Jacobian frozen at s_star. Throws
/// NotConverged when |F(s_star) - s_star| >= tol.
GradientSeries rbp_gradients(const LayeredNetwork &net, std::span<const double> x,
                             const NetworkState &s_star, std::span<const double> y, int K,
                             double tol = 1e-6);

/// Sum of a series' parameter gradients, per block.
ParamSet total_param_grad(const GradientSeries &series);

/// Central differences of L* = l(s_*) where s_* is recomputed with T free
/// steps at each perturbed theta. Throws NotConverged when a perturbed run
/// ends with residual >= tol.
ParamSet finite_diff_loss_grad(const LayeredNetwork &net, std::span<const double> x,
                               std::span<const double> y, int T, double delta = 1e-5,
                               double tol = 1e-9);

/// Central differences of L = l(s_T) for exactly T steps from zero.
ParamSet finite_diff_unrolled_grad(const LayeredNetwork &net, std::span<const double> x,
                                   std::span<const double> y, int T, double delta = 1e-5);

/// Central differences of L_t = l(s_t) with respect to the initial state s_0,
/// evaluated at s_0 = s_star.
NetworkState projected_cost_state_grad(const LayeredNetwork &net, std::span<const double> x,
                                       const NetworkState &s_star, std::span<const double> y,
                                       int t, double delta = 1e-5);

} // namespace eqprop
