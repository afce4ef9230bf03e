// SPDX-License-Identifier: Apache-2.0

#include "eqprop/phases.hpp"

#include <cmath>

#include <string>

#include "eqprop/parallel.hpp"

namespace eqprop {

std::string_view to_string(Algorithm algo) noexcept {
  switch (algo) {
  case Algorithm::EP: return "EP";
  case Algorithm::CEP: return "CEP";
  case Algorithm::CVF: return "CVF";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ep" || name == "EP")
    return Algorithm::EP;
  if (name == "cep" || name == "CEP" || name == "c-ep" || name == "C-EP")
    return Algorithm::CEP;
  if (name == "cvf" || name == "CVF" || name == "c-vf" || name == "C-VF")
    return Algorithm::CVF;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

namespace {

// Past this magnitude a run is treated as diverging even while still finite.
constexpr double kStateBound = 1e8;

void require_finite(const NetworkState &s, const char *phase, int step) {
  bool bounded = true;
  for (const auto &layer : s.layers)
    for (double v : layer)
      bounded = bounded && std::abs(v) <= kStateBound;
  if (!s.finite() || !bounded)
    throw Error(ErrorCode::Divergence, std::string(phase) + ": non-finite or unbounded state at step " +
                                           std::to_string(step));
}

Vector presyn(const LayeredNetwork &net, const Vector &layer) {
  if (net.mode == DynamicsMode::DiscreteTime)
    return layer;
  Vector out(layer.size());
  for (std::size_t i = 0; i < layer.size(); ++i)
    out[i] = activate(net.activation, layer[i]);
  return out;
}

bool masked_out(const std::vector<bool> &mask, std::size_t block) {
  return !mask.empty() && !mask[block];
}

} // namespace

Trajectory run_free_phase(const LayeredNetwork &net, std::span<const double> x,
                          const Hyperparams &hyper) {
  if (hyper.T <= 0)
    throw Error(ErrorCode::InvalidArgument, "T must be positive");
  const Vector drive = input_drive(net, x);
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(hyper.T) + 1);
  traj.states.push_back(NetworkState::zeros(net));
  for (int t = 0; t < hyper.T; ++t) {
    NetworkState next;
    transition_into(net, drive, traj.states.back(), next);
    require_finite(next, "free phase", t + 1);
    traj.states.push_back(std::move(next));
  }
  const auto &st = traj.states;
  traj.final_residual = state_distance(st[st.size() - 1], st[st.size() - 2]);
  traj.converged = traj.final_residual < hyper.convergence_tol;
  return traj;
}

Relaxed relax(const LayeredNetwork &net, std::span<const double> x, int steps,
              const NetworkState *start) {
  const Vector drive = input_drive(net, x);
  NetworkState cur = start ? *start : NetworkState::zeros(net);
  NetworkState next;
  double residual = 0.0;
  for (int t = 0; t < steps; ++t) {
    transition_into(net, drive, cur, next);
    require_finite(next, "free phase", t + 1);
    if (t + 1 == steps)
      residual = state_distance(next, cur);
    std::swap(cur, next);
  }
  return {std::move(cur), residual};
}

void apply_nudge(const LayeredNetwork &net, double beta, std::span<const double> y,
                 const NetworkState &current, NetworkState &next) {
  if (y.size() != net.layer_sizes[0])
    throw Error(ErrorCode::DimensionMismatch, "target length does not match output layer");
  const double gain = net.mode == DynamicsMode::RealTime ? beta * net.epsilon : beta;
  const Vector &out_now = current.layers[0];
  Vector &out_next = next.layers[0];
  for (std::size_t i = 0; i < out_next.size(); ++i)
    out_next[i] += gain * (y[i] - out_now[i]);
}

void accumulate_normalized_update(const LayeredNetwork &net, Algorithm algo,
                                  std::span<const double> x_eff, const NetworkState &s_t,
                                  const NetworkState &s_next, double scale, ParamSet &out,
                                  const std::vector<bool> &block_mask) {
  const std::size_t n_hidden = net.hidden_count();
  if (algo == Algorithm::CVF) {
    for (std::size_t n = 0; n <= n_hidden; ++n) {
      // Post-synaptic difference of layer n, pre-synaptic factors at time t.
      Vector diff(s_t.layers[n].size());
      for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = s_next.layers[n][i] - s_t.layers[n][i];
      if (n < n_hidden && !masked_out(block_mask, n))
        ger(scale, diff, presyn(net, s_t.layers[n + 1]), out[n]);
      if (n == n_hidden && !masked_out(block_mask, n_hidden))
        ger(scale, diff, x_eff, out[n_hidden]);
      if (n > 0 && !net.tied) {
        const std::size_t block = n_hidden + n; // W_{n, n-1}
        if (!masked_out(block_mask, block))
          ger(scale, diff, presyn(net, s_t.layers[n - 1]), out[block]);
      }
    }
    return;
  }
  std::vector<Vector> pre_t, pre_next;
  for (std::size_t n = 0; n <= n_hidden; ++n) {
    pre_t.push_back(presyn(net, s_t.layers[n]));
    pre_next.push_back(presyn(net, s_next.layers[n]));
  }
  for (std::size_t n = 0; n < n_hidden; ++n) {
    if (masked_out(block_mask, n))
      continue;
    ger(scale, pre_next[n], pre_next[n + 1], out[n]);
    ger(-scale, pre_t[n], pre_t[n + 1], out[n]);
  }
  if (!masked_out(block_mask, n_hidden)) {
    Vector diff(pre_t[n_hidden].size());
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = pre_next[n_hidden][i] - pre_t[n_hidden][i];
    ger(scale, diff, x_eff, out[n_hidden]);
  }
}

std::vector<double> block_rates(const LayeredNetwork &net, const Hyperparams &hyper) {
  std::vector<double> rates(net.block_count());
  for (std::size_t b = 0; b < rates.size(); ++b)
    rates[b] = hyper.rate_for_block(net, b);
  return rates;
}

SecondPhaseRecord run_nudged_ep(const LayeredNetwork &net, const NetworkState &s_star,
                                std::span<const double> x, std::span<const double> y,
                                const Hyperparams &hyper) {
  if (!net.tied)
    throw Error(ErrorCode::UntiedNetwork, "EP requires tied weights");
  {
    // beta = 0 is a valid (trivial) nudged run; only normalised updates divide by it.
    Hyperparams check = hyper;
    if (check.beta == 0.0)
      check.beta = 1.0;
    check.validate(net.mode);
  }
  const Vector drive = input_drive(net, x);
  SecondPhaseRecord rec;
  rec.algorithm = Algorithm::EP;
  rec.beta = hyper.beta;
  rec.eta.assign(net.block_count(), 0.0);
  rec.x.assign(x.begin(), x.end());
  rec.y.assign(y.begin(), y.end());
  rec.states.reserve(static_cast<std::size_t>(hyper.K) + 1);
  rec.states.push_back(s_star);
  for (int t = 0; t < hyper.K; ++t) {
    const NetworkState &cur = rec.states.back();
    NetworkState next;
    transition_into(net, drive, cur, next);
    apply_nudge(net, hyper.beta, y, cur, next);
    require_finite(next, "EP second phase", t + 1);
    rec.states.push_back(std::move(next));
  }
  rec.params.assign(rec.states.size(), net.params);
  return rec;
}

ContinualBatchResult run_continual_batch(LayeredNetwork &net, Algorithm algo,
                                         std::span<const Vector> xs, std::span<const Vector> ys,
                                         std::vector<NetworkState> starts, double beta,
                                         const std::vector<double> &block_eta, int K,
                                         bool skip_diverged, SecondPhaseRecord *record) {
  if (algo == Algorithm::EP)
    throw Error(ErrorCode::InvalidArgument, "run_continual_batch: EP has frozen weights");
  if (algo == Algorithm::CEP && !net.tied)
    throw Error(ErrorCode::UntiedNetwork, "C-EP requires tied weights");
  if (algo == Algorithm::CVF && net.tied)
    throw Error(ErrorCode::InvalidArgument, "C-VF requires untied weights");
  if (xs.size() != ys.size() || xs.size() != starts.size())
    throw Error(ErrorCode::DimensionMismatch, "batch inputs, targets and states differ in size");
  if (block_eta.size() != net.block_count())
    throw Error(ErrorCode::DimensionMismatch, "one learning rate per parameter block expected");
  if (beta == 0.0)
    throw Error(ErrorCode::InvalidArgument, "beta must be non-zero");

  const std::size_t batch = xs.size();
  std::vector<bool> learning(net.block_count());
  bool any_learning = false;
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    learning[b] = block_eta[b] != 0.0;
    any_learning = any_learning || learning[b];
  }

  std::vector<Vector> x_eff(batch);
  for (std::size_t i = 0; i < batch; ++i)
    x_eff[i] = effective_input(net, xs[i]);

  ContinualBatchResult result;
  result.applied = zeros_like(net.params);
  result.skipped.assign(batch, false);
  std::vector<NetworkState> cur = std::move(starts);
  std::vector<NetworkState> next(batch);
  std::vector<char> diverged(batch, 0);

  if (record) {
    record->algorithm = algo;
    record->beta = beta;
    record->eta = block_eta;
    record->x = xs.empty() ? Vector{} : xs[0];
    record->y = ys.empty() ? Vector{} : ys[0];
    record->states.assign(1, cur.empty() ? NetworkState{} : cur[0]);
    record->params.assign(1, net.params);
  }

  ParamSet step_update = zeros_like(net.params);
  for (int t = 0; t < K; ++t) {
    parallel_for(batch, [&](std::size_t i) {
      if (result.skipped[i])
        return;
      const Vector drive = input_drive(net, xs[i]);
      transition_into(net, drive, cur[i], next[i]);
      apply_nudge(net, beta, ys[i], cur[i], next[i]);
      diverged[i] = next[i].finite() ? 0 : 1;
    });
    std::size_t active = 0;
    for (std::size_t i = 0; i < batch; ++i) {
      if (result.skipped[i])
        continue;
      if (diverged[i]) {
        if (!skip_diverged)
          throw Error(ErrorCode::Divergence, std::string(to_string(algo)) +
                                                 " second phase: non-finite state at step " +
                                                 std::to_string(t + 1));
        result.skipped[i] = true;
        continue;
      }
      ++active;
    }
    if (any_learning && active > 0) {
      for (auto &m : step_update)
        m.fill(0.0);
      const double scale = 1.0 / (beta * static_cast<double>(active));
      for (std::size_t i = 0; i < batch; ++i) {
        if (result.skipped[i])
          continue;
        accumulate_normalized_update(net, algo, x_eff[i], cur[i], next[i], scale, step_update,
                                     learning);
      }
      for (std::size_t b = 0; b < net.block_count(); ++b) {
        if (!learning[b])
          continue;
        Matrix inc(step_update[b].rows(), step_update[b].cols());
        axpy(block_eta[b], step_update[b].flat(), inc.flat());
        axpy(1.0, inc.flat(), net.params[b].flat());
        axpy(1.0, inc.flat(), result.applied[b].flat());
      }
    }
    for (std::size_t i = 0; i < batch; ++i)
      if (!result.skipped[i])
        std::swap(cur[i], next[i]);
    if (record) {
      if (result.skipped[0])
        throw Error(ErrorCode::Divergence, "recorded sample diverged");
      record->states.push_back(cur[0]);
      record->params.push_back(net.params);
    }
  }
  result.final_states = std::move(cur);
  return result;
}

namespace {

SecondPhaseRecord run_single_continual(const LayeredNetwork &net, Algorithm algo,
                                       const NetworkState &s_star, std::span<const double> x,
                                       std::span<const double> y, const Hyperparams &hyper) {
  hyper.validate(net.mode);
  LayeredNetwork work = net;
  const std::vector<Vector> xs{Vector(x.begin(), x.end())};
  const std::vector<Vector> ys{Vector(y.begin(), y.end())};
  SecondPhaseRecord rec;
  run_continual_batch(work, algo, xs, ys, {s_star}, hyper.beta, block_rates(net, hyper), hyper.K,
                      false, &rec);
  return rec;
}

} // namespace

SecondPhaseRecord run_nudged_cep(const LayeredNetwork &net, const NetworkState &s_star,
                                 std::span<const double> x, std::span<const double> y,
                                 const Hyperparams &hyper) {
  if (!net.tied)
    throw Error(ErrorCode::UntiedNetwork, "C-EP requires tied weights");
  return run_single_continual(net, Algorithm::CEP, s_star, x, y, hyper);
}

SecondPhaseRecord run_nudged_cvf(const LayeredNetwork &net, const NetworkState &s_star,
                                 std::span<const double> x, std::span<const double> y,
                                 const Hyperparams &hyper) {
  if (net.tied)
    throw Error(ErrorCode::InvalidArgument, "C-VF requires untied weights");
  return run_single_continual(net, Algorithm::CVF, s_star, x, y, hyper);
}

} // namespace eqprop
