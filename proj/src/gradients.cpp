// SPDX-License-Identifier: Apache-2.0

#include "eqprop/gradients.hpp"

#include <cmath>
#include <string>

#include "eqprop/parallel.hpp"

namespace eqprop {

std::string_view to_string(GradAlgorithm algo) noexcept {
  return algo == GradAlgorithm::BPTT ? "BPTT" : "RBP";
}

double loss(const NetworkState &s, std::span<const double> y) {
  const Vector &out = s.layers.at(0);
  if (out.size() != y.size())
    throw Error(ErrorCode::DimensionMismatch, "loss: target length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - out[i];
    acc += d * d;
  }
  return 0.5 * acc;
}

NetworkState loss_state_grad(const NetworkState &s, std::span<const double> y) {
  NetworkState g = s;
  for (auto &l : g.layers)
    std::fill(l.begin(), l.end(), 0.0);
  const Vector &out = s.layers.at(0);
  if (out.size() != y.size())
    throw Error(ErrorCode::DimensionMismatch, "loss: target length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i)
    g.layers[0][i] = out[i] - y[i];
  return g;
}

Linearization linearize(const LayeredNetwork &net, std::span<const double> x,
                        const NetworkState &s) {
  Linearization lin;
  lin.x_eff = effective_input(net, x);
  if (net.mode == DynamicsMode::DiscreteTime) {
    lin.pre = s.layers;
    const std::vector<Vector> a = couplings(net, input_drive(net, x), s);
    for (const auto &an : a)
      lin.gain.push_back(activation_derivative(net.activation, an));
  } else {
    for (const auto &l : s.layers) {
      lin.pre.push_back(activation_apply(net.activation, l));
      lin.gain.push_back(activation_derivative(net.activation, l));
    }
  }
  return lin;
}

namespace {

// Error signal at the couplings: sigma'(a) g (DiscreteTime), epsilon g (RealTime).
std::vector<Vector> coupling_delta(const LayeredNetwork &net, const Linearization &lin,
                                   const NetworkState &g) {
  std::vector<Vector> delta(g.layers.size());
  for (std::size_t n = 0; n < g.layers.size(); ++n) {
    delta[n].resize(g.layers[n].size());
    for (std::size_t i = 0; i < delta[n].size(); ++i)
      delta[n][i] = net.mode == DynamicsMode::DiscreteTime ? lin.gain[n][i] * g.layers[n][i]
                                                           : net.epsilon * g.layers[n][i];
  }
  return delta;
}

} // namespace

NetworkState vjp_state(const LayeredNetwork &net, const Linearization &lin, const NetworkState &g) {
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Vector> delta = coupling_delta(net, lin, g);
  NetworkState out;
  out.layers.resize(net.layer_count());
  for (std::size_t m = 0; m <= n_hidden; ++m) {
    Vector u(net.layer_sizes[m], 0.0);
    if (m > 0)
      gemv_t_acc(net.forward(m - 1), delta[m - 1], u);
    if (m < n_hidden) {
      if (net.tied)
        gemv_acc(net.forward(m), delta[m + 1], u);
      else
        gemv_t_acc(net.backward(m), delta[m + 1], u);
    }
    if (net.mode == DynamicsMode::RealTime) {
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = (1.0 - net.epsilon) * g.layers[m][i] + lin.gain[m][i] * u[i];
    }
    out.layers[m] = std::move(u);
  }
  return out;
}

ParamSet vjp_params(const LayeredNetwork &net, const Linearization &lin, const NetworkState &g) {
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Vector> delta = coupling_delta(net, lin, g);
  ParamSet out = zeros_like(net.params);
  for (std::size_t n = 0; n < n_hidden; ++n) {
    ger(1.0, delta[n], lin.pre[n + 1], out[n]);
    if (net.tied)
      ger(1.0, lin.pre[n], delta[n + 1], out[n]);
    else
      ger(1.0, delta[n + 1], lin.pre[n], out[n_hidden + 1 + n]);
  }
  ger(1.0, delta[n_hidden], lin.x_eff, out[n_hidden]);
  return out;
}

namespace {

double param_norm(const ParamSet &p) {
  double acc = 0.0;
  for (const auto &m : p)
    acc += dot(m.flat(), m.flat());
  return std::sqrt(acc);
}

} // namespace

GradientSeries bptt_gradients(const LayeredNetwork &net, std::span<const double> x,
                              const Trajectory &traj, std::span<const double> y, int K) {
  const int T = static_cast<int>(traj.states.size()) - 1;
  if (K <= 0)
    throw Error(ErrorCode::InvalidArgument, "BPTT: K must be positive");
  if (K > T)
    throw Error(ErrorCode::InvalidArgument, "BPTT: K = " + std::to_string(K) +
                                                " exceeds T = " + std::to_string(T));
  GradientSeries series;
  series.algorithm = GradAlgorithm::BPTT;
  series.state_grads.push_back(loss_state_grad(traj.states[T], y));
  for (int k = 0; k < K; ++k) {
    const Linearization lin = linearize(net, x, traj.states[T - k - 1]);
    series.param_grads.push_back(vjp_params(net, lin, series.state_grads.back()));
    series.state_grads.push_back(vjp_state(net, lin, series.state_grads.back()));
  }
  series.tail_norm = param_norm(series.param_grads.back());
  return series;
}

GradientSeries rbp_gradients(const LayeredNetwork &net, std::span<const double> x,
                             const NetworkState &s_star, std::span<const double> y, int K,
                             double tol) {
  if (K <= 0)
    throw Error(ErrorCode::InvalidArgument, "RBP: K must be positive");
  const double residual = state_distance(transition_step(net, x, s_star), s_star);
  if (!(residual < tol))
    throw Error(ErrorCode::NotConverged, "RBP: state is not a steady state (residual " +
                                             std::to_string(residual) + ")");
  const Linearization lin = linearize(net, x, s_star);
  GradientSeries series;
  series.algorithm = GradAlgorithm::RBP;
  series.state_grads.push_back(loss_state_grad(s_star, y));
  for (int k = 0; k < K; ++k) {
    series.param_grads.push_back(vjp_params(net, lin, series.state_grads.back()));
    series.state_grads.push_back(vjp_state(net, lin, series.state_grads.back()));
  }
  series.tail_norm = param_norm(series.param_grads.back());
  return series;
}

ParamSet total_param_grad(const GradientSeries &series) {
  if (series.param_grads.empty())
    return {};
  ParamSet total = zeros_like(series.param_grads.front());
  for (const auto &p : series.param_grads)
    for (std::size_t b = 0; b < p.size(); ++b)
      axpy(1.0, p[b].flat(), total[b].flat());
  return total;
}

namespace {

template <class Objective>
ParamSet central_differences(const LayeredNetwork &net, double delta, Objective objective) {
  if (!(delta > 0.0))
    throw Error(ErrorCode::InvalidArgument, "finite differences need delta > 0");
  ParamSet grad = zeros_like(net.params);
  // Flat index space over all blocks; each index owns its output slot.
  std::vector<std::pair<std::size_t, std::size_t>> index;
  for (std::size_t b = 0; b < net.block_count(); ++b)
    for (std::size_t i = 0; i < net.params[b].size(); ++i)
      index.emplace_back(b, i);
  parallel_for(index.size(), [&](std::size_t k) {
    const auto [b, i] = index[k];
    LayeredNetwork probe = net;
    const double base = net.params[b].flat()[i];
    probe.params[b].flat()[i] = base + delta;
    const double up = objective(probe);
    probe.params[b].flat()[i] = base - delta;
    const double down = objective(probe);
    grad[b].flat()[i] = (up - down) / (2.0 * delta);
  });
  return grad;
}

} // namespace

ParamSet finite_diff_loss_grad(const LayeredNetwork &net, std::span<const double> x,
                               std::span<const double> y, int T, double delta, double tol) {
  return central_differences(net, delta, [&](const LayeredNetwork &probe) {
    const Relaxed r = relax(probe, x, T);
    if (!(r.residual < tol))
      throw Error(ErrorCode::NotConverged,
                  "finite differences: perturbed free phase did not converge (residual " +
                      std::to_string(r.residual) + ")");
    return loss(r.state, y);
  });
}

ParamSet finite_diff_unrolled_grad(const LayeredNetwork &net, std::span<const double> x,
                                   std::span<const double> y, int T, double delta) {
  return central_differences(net, delta, [&](const LayeredNetwork &probe) {
    return loss(relax(probe, x, T).state, y);
  });
}

NetworkState projected_cost_state_grad(const LayeredNetwork &net, std::span<const double> x,
                                       const NetworkState &s_star, std::span<const double> y,
                                       int t, double delta) {
  if (t < 0)
    throw Error(ErrorCode::InvalidArgument, "projected cost: t must be non-negative");
  if (!(delta > 0.0))
    throw Error(ErrorCode::InvalidArgument, "finite differences need delta > 0");
  if (t == 0)
    return loss_state_grad(s_star, y);
  NetworkState grad = s_star;
  for (std::size_t n = 0; n < s_star.layers.size(); ++n) {
    for (std::size_t i = 0; i < s_star.layers[n].size(); ++i) {
      NetworkState probe = s_star;
      probe.layers[n][i] = s_star.layers[n][i] + delta;
      const double up = loss(relax(net, x, t, &probe).state, y);
      probe.layers[n][i] = s_star.layers[n][i] - delta;
      const double down = loss(relax(net, x, t, &probe).state, y);
      grad.layers[n][i] = (up - down) / (2.0 * delta);
    }
  }
  return grad;
}

} // namespace eqprop
