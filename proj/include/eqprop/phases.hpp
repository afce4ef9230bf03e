// SPDX-License-Identifier: Apache-2.0
/**
 * @file phases.hpp
 * @brief Free phase and the three nudged second phases (EP, C-EP, C-VF).
 *
 * Second phases start from the free steady state s_*. The output layer is
 * pulled towards the target by beta (y - s^0_t) in DiscreteTime mode and by
 * beta epsilon (y - s^0_t) in RealTime mode, which is -beta dl/ds for the
 * loss l = 1/2 |y - s^0|^2 (scaled by epsilon in RealTime).
 *
 * In the continual variants a step first updates the state with the current
 * parameters theta_t and then moves the parameters using (s_{t+1}, s_t):
 *
 *   s_{t+1}     = F(x, s_t, theta_t) + nudge
 *   theta_{t+1} = theta_t + eta_n * Delta_theta(t)
 *
 * where Delta_theta(t) is the normalised update of the algorithm (see
 * accumulate_normalized_update).
 */
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eqprop/model.hpp"

namespace eqprop {

enum class Algorithm { EP, CEP, CVF };

std::string_view to_string(Algorithm algo) noexcept;
Algorithm parse_algorithm(std::string_view name);

struct Trajectory {
  std::vector<NetworkState> states; // s_0 ... s_T
  bool converged = false;
  double final_residual = 0.0;

  const NetworkState &steady_state() const { return states.back(); }
};

/// T synchronous steps from s_0 = 0, every state recorded. Throws
/// ErrorCode::Divergence on a non-finite state. Non-convergence is reported
/// through `converged`, not thrown.
Trajectory run_free_phase(const LayeredNetwork &net, std::span<const double> x,
                          const Hyperparams &hyper);

struct Relaxed {
  NetworkState state;
  double residual = 0.0;
};

/// `steps` free steps from `start` (zero state when omitted) keeping only the
/// last state.
Relaxed relax(const LayeredNetwork &net, std::span<const double> x, int steps,
              const NetworkState *start = nullptr);

struct SecondPhaseRecord {
  Algorithm algorithm = Algorithm::EP;
  std::vector<NetworkState> states; // s_0^beta ... s_K^beta
  std::vector<ParamSet> params;     // theta_0 ... theta_K
  double beta = 0.0;
  std::vector<double> eta; // per block
  Vector x;
  Vector y;
};

/// Adds scale * (unnormalised) update of `algo` between s_t and s_next into
/// `out`, for every block whose mask entry is set (all blocks if empty):
///  - EP / CEP: dPhi/dtheta(s_next) - dPhi/dtheta(s_t)  (phi_param_terms)
///  - CVF: post-synaptic difference times pre-synaptic state at time t.
/// `x_eff` is effective_input(net, x).
void accumulate_normalized_update(const LayeredNetwork &net, Algorithm algo,
                                  std::span<const double> x_eff, const NetworkState &s_t,
                                  const NetworkState &s_next, double scale, ParamSet &out,
                                  const std::vector<bool> &block_mask = {});

/// Adds the nudging term to `next` (the freshly computed state).
void apply_nudge(const LayeredNetwork &net, double beta, std::span<const double> y,
                 const NetworkState &current, NetworkState &next);

/// K nudged steps with frozen weights. Tied networks only.
SecondPhaseRecord run_nudged_ep(const LayeredNetwork &net, const NetworkState &s_star,
                                std::span<const double> x, std::span<const double> y,
                                const Hyperparams &hyper);

/// C-EP second phase, parameters evolving with per-layer rates. Tied only.
SecondPhaseRecord run_nudged_cep(const LayeredNetwork &net, const NetworkState &s_star,
                                 std::span<const double> x, std::span<const double> y,
                                 const Hyperparams &hyper);

/// C-VF second phase on an untied network.
SecondPhaseRecord run_nudged_cvf(const LayeredNetwork &net, const NetworkState &s_star,
                                 std::span<const double> x, std::span<const double> y,
                                 const Hyperparams &hyper);

/// Per-block learning rates for a network (zero where unset).
std::vector<double> block_rates(const LayeredNetwork &net, const Hyperparams &hyper);

/// Batched continual second phase shared by C-EP/C-VF training: all samples
/// start from their own steady state and see one shared theta_t; the per-step
/// update is the batch average of the per-sample normalised updates.
struct ContinualBatchResult {
  ParamSet applied;          // sum over t of eta * Delta(t), per block
  std::vector<bool> skipped; // samples dropped after a non-finite state
  std::vector<NetworkState> final_states;
};

/// Mutates `net` in place. With `skip_diverged` a sample whose state becomes
/// non-finite is dropped from the batch; otherwise Divergence is thrown.
ContinualBatchResult run_continual_batch(LayeredNetwork &net, Algorithm algo,
                                         std::span<const Vector> xs, std::span<const Vector> ys,
                                         std::vector<NetworkState> starts, double beta,
                                         const std::vector<double> &block_eta, int K,
                                         bool skip_diverged,
                                         SecondPhaseRecord *record = nullptr);

} // namespace eqprop
