// SPDX-License-Identifier: Apache-2.0

#include "eqprop/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace eqprop {

std::string_view to_string(DynamicsMode mode) noexcept {
  return mode == DynamicsMode::DiscreteTime ? "discrete" : "realtime";
}

DynamicsMode parse_mode(std::string_view name) {
  if (name == "discrete" || name == "discrete_time" || name == "DiscreteTime")
    return DynamicsMode::DiscreteTime;
  if (name == "realtime" || name == "real_time" || name == "RealTime")
    return DynamicsMode::RealTime;
  throw Error(ErrorCode::InvalidArgument, "unknown dynamics mode '" + std::string(name) + "'");
}

LayeredNetwork LayeredNetwork::zeros(std::vector<std::size_t> layer_sizes, std::size_t input_size,
                                     bool tied, ActivationKind activation, DynamicsMode mode,
                                     double epsilon) {
  if (layer_sizes.empty())
    throw Error(ErrorCode::InvalidArgument, "network needs at least an output layer");
  LayeredNetwork net;
  net.layer_sizes = std::move(layer_sizes);
  net.input_size = input_size;
  net.tied = tied;
  net.activation = activation;
  net.mode = mode;
  net.epsilon = epsilon;
  const std::size_t n_hidden = net.hidden_count();
  for (std::size_t n = 0; n < n_hidden; ++n)
    net.params.emplace_back(net.layer_sizes[n], net.layer_sizes[n + 1]);
  net.params.emplace_back(net.layer_sizes[n_hidden], input_size);
  if (!tied) {
    for (std::size_t n = 0; n < n_hidden; ++n)
      net.params.emplace_back(net.layer_sizes[n + 1], net.layer_sizes[n]);
  }
  return net;
}

std::string LayeredNetwork::block_name(std::size_t block) const {
  const std::size_t n_hidden = hidden_count();
  if (block < n_hidden)
    return "W" + std::to_string(block) + "_" + std::to_string(block + 1);
  if (block == n_hidden)
    return "W" + std::to_string(n_hidden) + "_x";
  const std::size_t n = block - n_hidden - 1;
  return "W" + std::to_string(n + 1) + "_" + std::to_string(n);
}

std::size_t LayeredNetwork::block_rate_index(std::size_t block) const noexcept {
  const std::size_t n_hidden = hidden_count();
  if (block <= n_hidden)
    return block;
  return block - n_hidden - 1;
}

void LayeredNetwork::validate() const {
  auto fail = [](const std::string &what) { throw Error(ErrorCode::DimensionMismatch, what); };
  if (layer_sizes.empty())
    fail("network has no layers");
  const std::size_t n_hidden = hidden_count();
  const std::size_t expected = tied ? n_hidden + 1 : 2 * n_hidden + 1;
  if (params.size() != expected)
    fail("network has " + std::to_string(params.size()) + " parameter blocks, expected " +
         std::to_string(expected));
  for (std::size_t n = 0; n < n_hidden; ++n) {
    if (forward(n).rows() != layer_sizes[n] || forward(n).cols() != layer_sizes[n + 1])
      fail("block " + block_name(n) + " has wrong shape");
    if (!tied &&
        (backward(n).rows() != layer_sizes[n + 1] || backward(n).cols() != layer_sizes[n]))
      fail("block " + block_name(n_hidden + 1 + n) + " has wrong shape");
  }
  if (input_weights().rows() != layer_sizes[n_hidden] || input_weights().cols() != input_size)
    fail("block " + block_name(n_hidden) + " has wrong shape");
  if (mode == DynamicsMode::RealTime && !(epsilon > 0.0 && epsilon <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1] for RealTime dynamics");
}

NetworkState NetworkState::zeros(const LayeredNetwork &net) {
  NetworkState s;
  for (std::size_t d : net.layer_sizes)
    s.layers.emplace_back(d, 0.0);
  return s;
}

std::size_t NetworkState::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto &l : layers)
    n += l.size();
  return n;
}

Vector NetworkState::flatten() const {
  Vector out;
  out.reserve(total_size());
  for (const auto &l : layers)
    out.insert(out.end(), l.begin(), l.end());
  return out;
}

bool NetworkState::finite() const noexcept {
  for (const auto &l : layers)
    if (!all_finite(l))
      return false;
  return true;
}

double state_distance(const NetworkState &a, const NetworkState &b) {
  if (a.layers.size() != b.layers.size())
    throw Error(ErrorCode::DimensionMismatch, "state_distance: layer count mismatch");
  double acc = 0.0;
  for (std::size_t n = 0; n < a.layers.size(); ++n) {
    if (a.layers[n].size() != b.layers[n].size())
      throw Error(ErrorCode::DimensionMismatch, "state_distance: layer size mismatch");
    for (std::size_t i = 0; i < a.layers[n].size(); ++i) {
      const double d = a.layers[n][i] - b.layers[n][i];
      acc += d * d;
    }
  }
  return std::sqrt(acc);
}

void Hyperparams::validate(DynamicsMode mode) const {
  auto fail = [](const std::string &what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (T <= 0)
    fail("T must be positive");
  if (K <= 0)
    fail("K must be positive");
  if (beta == 0.0 || !std::isfinite(beta))
    fail("beta must be finite and non-zero");
  if (mode == DynamicsMode::RealTime && !(epsilon > 0.0 && epsilon <= 1.0))
    fail("epsilon must lie in (0, 1] for RealTime dynamics");
  for (double lr : lr_per_layer)
    if (!(lr >= 0.0) || !std::isfinite(lr))
      fail("learning rates must be finite and non-negative");
  if (!(convergence_tol > 0.0))
    fail("convergence_tol must be positive");
}

double Hyperparams::rate_for_block(const LayeredNetwork &net, std::size_t block) const {
  const std::size_t idx = net.block_rate_index(block);
  return idx < lr_per_layer.size() ? lr_per_layer[idx] : 0.0;
}

Vector effective_input(const LayeredNetwork &net, std::span<const double> x) {
  if (net.mode == DynamicsMode::RealTime)
    return activation_apply(net.activation, x);
  return Vector(x.begin(), x.end());
}

Vector input_drive(const LayeredNetwork &net, std::span<const double> x) {
  if (x.size() != net.input_size)
    throw Error(ErrorCode::DimensionMismatch, "input has length " + std::to_string(x.size()) +
                                                  ", network expects " +
                                                  std::to_string(net.input_size));
  const Vector xe = effective_input(net, x);
  Vector drive(net.layer_sizes.back(), 0.0);
  gemv(net.input_weights(), xe, drive);
  return drive;
}

namespace {

void check_state(const LayeredNetwork &net, const NetworkState &s) {
  if (s.layers.size() != net.layer_count())
    throw Error(ErrorCode::DimensionMismatch, "state has wrong layer count");
  for (std::size_t n = 0; n < net.layer_count(); ++n)
    if (s.layers[n].size() != net.layer_sizes[n])
      throw Error(ErrorCode::DimensionMismatch, "state layer " + std::to_string(n) +
                                                    " has wrong size");
}

// The presynaptic view of the state: s itself, or sigma(s) in RealTime.
std::vector<Vector> presynaptic(const LayeredNetwork &net, const NetworkState &s) {
  std::vector<Vector> out;
  out.reserve(s.layers.size());
  for (const auto &l : s.layers) {
    if (net.mode == DynamicsMode::RealTime) {
      Vector v(l.size());
      for (std::size_t i = 0; i < l.size(); ++i)
        v[i] = activate(net.activation, l[i]);
      out.push_back(std::move(v));
    } else {
      out.push_back(l);
    }
  }
  return out;
}

} // namespace

std::vector<Vector> couplings(const LayeredNetwork &net, std::span<const double> drive,
                              const NetworkState &s) {
  check_state(net, s);
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Vector> pre = presynaptic(net, s);
  std::vector<Vector> acc;
  acc.reserve(net.layer_count());
  for (std::size_t n = 0; n <= n_hidden; ++n) {
    Vector a(net.layer_sizes[n], 0.0);
    if (n < n_hidden)
      gemv_acc(net.forward(n), pre[n + 1], a);
    else
      axpy(1.0, drive, a);
    if (n > 0) {
      if (net.tied)
        gemv_t_acc(net.forward(n - 1), pre[n - 1], a);
      else
        gemv_acc(net.backward(n - 1), pre[n - 1], a);
    }
    acc.push_back(std::move(a));
  }
  return acc;
}

void transition_into(const LayeredNetwork &net, std::span<const double> drive,
                     const NetworkState &s, NetworkState &out) {
  std::vector<Vector> acc = couplings(net, drive, s);
  out.layers.resize(acc.size());
  if (net.mode == DynamicsMode::DiscreteTime) {
    for (std::size_t n = 0; n < acc.size(); ++n) {
      for (double &v : acc[n])
        v = activate(net.activation, v);
      out.layers[n] = std::move(acc[n]);
    }
  } else {
    const double eps = net.epsilon;
    for (std::size_t n = 0; n < acc.size(); ++n) {
      const Vector &prev = s.layers[n];
      for (std::size_t i = 0; i < acc[n].size(); ++i)
        acc[n][i] = (1.0 - eps) * prev[i] + eps * acc[n][i];
      out.layers[n] = std::move(acc[n]);
    }
  }
}

NetworkState transition_step(const LayeredNetwork &net, std::span<const double> x,
                             const NetworkState &s) {
  const Vector drive = input_drive(net, x);
  NetworkState out;
  transition_into(net, drive, s, out);
  return out;
}

double primitive_phi(const LayeredNetwork &net, std::span<const double> x, const NetworkState &s) {
  if (!net.tied)
    throw Error(ErrorCode::UntiedNetwork, "primitive function is undefined for untied weights");
  check_state(net, s);
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Vector> pre = presynaptic(net, s);
  const Vector xe = effective_input(net, x);
  double coupling = 0.0;
  for (std::size_t n = 0; n < n_hidden; ++n) {
    Vector tmp(net.layer_sizes[n], 0.0);
    gemv(net.forward(n), pre[n + 1], tmp);
    coupling += dot(pre[n], tmp);
  }
  Vector tmp(net.layer_sizes[n_hidden], 0.0);
  gemv(net.input_weights(), xe, tmp);
  coupling += dot(pre[n_hidden], tmp);
  if (net.mode == DynamicsMode::DiscreteTime)
    return coupling;
  double sq = 0.0;
  for (const auto &l : s.layers)
    sq += dot(l, l);
  return 0.5 * (1.0 - net.epsilon) * sq + net.epsilon * coupling;
}

ParamSet phi_param_terms(const LayeredNetwork &net, std::span<const double> x,
                         const NetworkState &s) {
  check_state(net, s);
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Vector> pre = presynaptic(net, s);
  const Vector xe = effective_input(net, x);
  ParamSet out;
  out.reserve(n_hidden + 1);
  for (std::size_t n = 0; n < n_hidden; ++n) {
    Matrix m(net.layer_sizes[n], net.layer_sizes[n + 1]);
    ger(1.0, pre[n], pre[n + 1], m);
    out.push_back(std::move(m));
  }
  Matrix mx(net.layer_sizes[n_hidden], net.input_size);
  ger(1.0, pre[n_hidden], xe, mx);
  out.push_back(std::move(mx));
  return out;
}

CondensedForm condensed_form(const LayeredNetwork &net) {
  if (!net.tied)
    throw Error(ErrorCode::UntiedNetwork, "condensed form requires tied weights");
  std::vector<std::size_t> offset(net.layer_count(), 0);
  for (std::size_t n = 1; n < net.layer_count(); ++n)
    offset[n] = offset[n - 1] + net.layer_sizes[n - 1];
  const std::size_t total = offset.back() + net.layer_sizes.back();
  CondensedForm f{Matrix(total, total), Matrix(total, net.input_size)};
  for (std::size_t n = 0; n < net.hidden_count(); ++n) {
    const Matrix &w = net.forward(n);
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c) {
        f.w(offset[n] + r, offset[n + 1] + c) = w(r, c);
        f.w(offset[n + 1] + c, offset[n] + r) = w(r, c);
      }
  }
  const Matrix &wx = net.input_weights();
  const std::size_t last = offset.back();
  for (std::size_t r = 0; r < wx.rows(); ++r)
    for (std::size_t c = 0; c < wx.cols(); ++c)
      f.wx(last + r, c) = wx(r, c);
  return f;
}

double condensed_phi(const CondensedForm &form, std::span<const double> s_flat,
                     std::span<const double> x) {
  Vector ws(form.w.rows(), 0.0);
  gemv(form.w, s_flat, ws);
  Vector wxx(form.wx.rows(), 0.0);
  gemv(form.wx, x, wxx);
  return 0.5 * dot(s_flat, ws) + dot(s_flat, wxx);
}

LayeredNetwork untie(const LayeredNetwork &tied_net) {
  if (!tied_net.tied)
    return tied_net;
  LayeredNetwork net = tied_net;
  net.tied = false;
  for (std::size_t n = 0; n < tied_net.hidden_count(); ++n)
    net.params.push_back(tied_net.forward(n).transposed());
  return net;
}

Vector flatten(const ParamSet &params) {
  std::size_t total = 0;
  for (const auto &m : params)
    total += m.size();
  Vector out;
  out.reserve(total);
  for (const auto &m : params)
    out.insert(out.end(), m.flat().begin(), m.flat().end());
  return out;
}

ParamSet zeros_like(const ParamSet &params) {
  ParamSet out;
  out.reserve(params.size());
  for (const auto &m : params)
    out.emplace_back(m.rows(), m.cols());
  return out;
}

} // namespace eqprop
