// SPDX-License-Identifier: Apache-2.0
/**
 * @file gdd.hpp
 * @brief Normalised updates of EP / C-EP / C-VF and their step-by-step
 *        comparison with BPTT or RBP gradients.
 *
 * Every comparison is against the negated gradient, so a cosine of 1 and an
 * angle of 0 degrees mean perfect agreement. Blocks are the state layers
 * ("s0", "s1", ...), the parameter blocks ("W0_1", "W1_x", ...) and the
 * concatenation of all parameter blocks ("all_params").
 */
#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eqprop/gradients.hpp"
#include "eqprop/phases.hpp"

namespace eqprop {

struct UpdateSeries {
  Algorithm algorithm = Algorithm::EP;
  std::vector<NetworkState> state_updates; // Delta_s(t), t = 0..K-1
  std::vector<ParamSet> param_updates;     // Delta_theta(t), t = 0..K-1
  /// Blocks whose update was recomputed from the states because eta = 0.
  std::vector<bool> from_states;
  double beta = 0.0;
  std::vector<double> eta;
};

/// Delta_s(t) = (s_{t+1} - s_t) / beta (beta * epsilon in RealTime mode) and
/// the blockwise differences of dPhi/dtheta divided by beta.
UpdateSeries normalized_updates_ep(const SecondPhaseRecord &record, const LayeredNetwork &net);

/// Delta_s as above, Delta_theta(t) = (theta_{t+1} -
/// theta_t) / eta. Blocks with eta = 0 get the update rule evaluated on the
/// states instead and are flagged in `from_states`.
UpdateSeries normalized_updates_continual(const SecondPhaseRecord &record,
                                          const LayeredNetwork &net);

/// Per-step metrics of one block; undefined entries are std::nullopt.
struct BlockComparison {
  std::string name;
  std::vector<std::optional<double>> cosine;
  std::vector<std::optional<double>> rel_mse;
  std::vector<std::optional<double>> sign_frac;
  std::optional<double> total_angle_deg;
  std::optional<double> total_rel_mse;
  std::optional<double> total_sign_frac;
};

struct GddReport {
  std::vector<BlockComparison> blocks;
  /// Angle between the concatenated total parameter update and the negated
  /// total parameter gradient.
  std::optional<double> total_angle_deg;

  const BlockComparison &block(std::string_view name) const;
  /// Smallest defined per-step cosine over all blocks and steps.
  std::optional<double> min_cosine() const;
};

/// Norms at or below this fraction of a block's largest per-step norm make
/// that step's metrics undefined.
inline constexpr double kUndefinedRelNorm = 1e-8;

/// Compares Delta(t) with -grad(t) for t = 0..K-1 where K is the update
/// series length. Throws DimensionMismatch when the gradient series is
/// shorter or shaped differently.
GddReport gdd_report(const LayeredNetwork &net, const UpdateSeries &updates,
                     const GradientSeries &grads);

/// Mean of every metric over the reports where it is defined.
GddReport average_reports(std::span<const GddReport> reports);

struct GddRow {
  Algorithm algorithm = Algorithm::EP;
  double beta = 0.0;
  std::vector<double> eta;
  std::size_t samples = 0;
  std::size_t unsettled = 0; ///< samples whose free phase missed convergence_tol
  GddReport report;
};

/// For every (beta, eta) pair and every sample: free phase of T steps, BPTT
/// over the last K steps, second phase of `algo`, report. Rows hold the
/// sample average.
std::vector<GddRow> gdd_sweep(const LayeredNetwork &net, Algorithm algo, const Hyperparams &hyper,
                              std::span<const Vector> xs, std::span<const Vector> ys,
                              std::span<const double> betas,
                              std::span<const std::vector<double>> etas);

/// "0.08-0.04" style rendering of a per-layer rate list.
std::string join_rates(std::span<const double> rates);

/// Writes the report table. `layers` is the topology label (e.g. "784-64-10").
void write_gdd_csv(std::ostream &out, std::span<const GddRow> rows, DynamicsMode mode,
                   const std::string &layers);

} // namespace eqprop
