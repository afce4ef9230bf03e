// SPDX-License-Identifier: Apache-2.0
/**
 * @file toy.hpp
 * @brief Scalar model s_{t+1} = (s_t + theta) / 2 with loss l(s) = s^2 / 2,
 *        primitive Phi(s, theta) = (s + theta)^2 / 4, steady state s_* = theta.
 *
 * The second phases are nudged by -beta s. The C-EP parameter moves by
 * (eta / beta) (dPhi/dtheta(s_{t+1}) - dPhi/dtheta(s_t)), which reduces to
 * (eta / 2 beta) (s_{t+1} - s_t).
 */
#pragma once

#include <ostream>
#include <string_view>
#include <vector>

#include "eqprop/model.hpp"

namespace eqprop {

struct ToyParams {
  double theta = 1.0;
  double beta = 0.1;
  double eta = 0.0;
  int T = 100;
  int K = 50;

  /// Throws InvalidArgument unless beta > 0, eta >= 0 and T, K >= 0.
  void validate() const;
  /// C-EP contraction factor 1 - 2 beta + eta / (2 beta) inside (-1, 1).
  /// Outside it the C-EP series grow; the closed forms still hold.
  bool cep_contracts() const noexcept;
};

enum class ToyQuantity {
  SBeta,
  DsEp,
  DthetaEp,
  DsCep,
  DthetaCep,
  GsRbp,
  GthetaRbp,
  GsBptt,
  GthetaBptt,
};

std::string_view to_string(ToyQuantity q) noexcept;
ToyQuantity parse_toy_quantity(std::string_view name);

/// Closed form at step t. BPTT quantities assume s_T = theta.
double toy_closed_form(const ToyParams &p, ToyQuantity q, int t);

double toy_transition(double s, double theta) noexcept;
double toy_dphi_dtheta(double s, double theta) noexcept;

struct ToySeries {
  std::vector<double> s_free;    // s_0 .. s_T
  std::vector<double> s_ep;      // s_0^beta .. s_K^beta
  std::vector<double> s_cep;     // s_0^{beta,eta} .. s_K^{beta,eta}
  std::vector<double> theta_cep; // theta_0 .. theta_K
  std::vector<double> d_s_ep, d_theta_ep, d_s_cep, d_theta_cep; // t = 0..K-1
  std::vector<double> g_s_rbp, g_theta_rbp, g_s_bptt, g_theta_bptt; // t = 0..K-1

  const std::vector<double> &series(ToyQuantity q) const;
};

/// Runs every recurrence directly: free phase from 0, EP and C-EP second
/// phases from s_T, and the BPTT/RBP backward recurrences.
ToySeries toy_simulate(const ToyParams &p);

/// The scalar model as a LayeredNetwork: RealTime, no hidden layer, identity
/// activation, epsilon = 1/2, input [1], W_{0,x} = [[theta]], target [0].
/// Nudging that network with 2 beta reproduces the toy nudged by beta.
LayeredNetwork toy_network(double theta);

/// One row per t = 0..K; cells that do not exist at t are empty.
void write_toy_csv(std::ostream &out, const ToyParams &p, const ToySeries &s);

} // namespace eqprop
