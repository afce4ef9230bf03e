// SPDX-License-Identifier: Apache-2.0

#include "eqprop/toy.hpp"

#include <cmath>
#include <iomanip>
#include <string>

namespace eqprop {

void ToyParams::validate() const {
  if (!(beta > 0.0))
    throw Error(ErrorCode::InvalidArgument, "toy: beta must be positive");
  if (!(eta >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "toy: eta must be non-negative");
  if (T < 0 || K < 0)
    throw Error(ErrorCode::InvalidArgument, "toy: step counts must be non-negative");
}

bool ToyParams::cep_contracts() const noexcept {
  const double rate = 1.0 - 2.0 * beta + eta / (2.0 * beta);
  return std::abs(rate) < 1.0;
}

namespace {

constexpr std::pair<ToyQuantity, std::string_view> kNames[] = {
    {ToyQuantity::SBeta, "s_beta"},         {ToyQuantity::DsEp, "d_s_ep"},
    {ToyQuantity::DthetaEp, "d_theta_ep"},  {ToyQuantity::DsCep, "d_s_cep"},
    {ToyQuantity::DthetaCep, "d_theta_cep"}, {ToyQuantity::GsRbp, "g_s_rbp"},
    {ToyQuantity::GthetaRbp, "g_theta_rbp"}, {ToyQuantity::GsBptt, "g_s_bptt"},
    {ToyQuantity::GthetaBptt, "g_theta_bptt"},
};

} // namespace

std::string_view to_string(ToyQuantity q) noexcept {
  for (const auto &[k, name] : kNames)
    if (k == q)
      return name;
  return "?";
}

ToyQuantity parse_toy_quantity(std::string_view name) {
  for (const auto &[k, n] : kNames)
    if (n == name)
      return k;
  throw Error(ErrorCode::InvalidArgument, "unknown toy quantity '" + std::string(name) + "'");
}

double toy_closed_form(const ToyParams &p, ToyQuantity q, int t) {
  if (t < 0)
    throw Error(ErrorCode::InvalidArgument, "toy: t must be non-negative");
  const double th = p.theta, b = p.beta;
  const double half_t = std::pow(0.5, t);
  switch (q) {
  case ToyQuantity::SBeta:
    return th / (1.0 + 2.0 * b) * (1.0 + 2.0 * b * std::pow(0.5 - b, t));
  case ToyQuantity::DsEp:
    return -th * half_t * std::pow(1.0 - 2.0 * b, t);
  case ToyQuantity::DthetaEp:
    return -0.5 * th * half_t * std::pow(1.0 - 2.0 * b, t);
  case ToyQuantity::DsCep:
    return -th * half_t * std::pow(1.0 - 2.0 * b + p.eta / (2.0 * b), t);
  case ToyQuantity::DthetaCep:
    return -0.5 * th * half_t * std::pow(1.0 - 2.0 * b + p.eta / (2.0 * b), t);
  case ToyQuantity::GsRbp:
  case ToyQuantity::GsBptt:
    return th * half_t;
  case ToyQuantity::GthetaRbp:
  case ToyQuantity::GthetaBptt:
    return 0.5 * th * half_t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown toy quantity");
}

double toy_transition(double s, double theta) noexcept { return 0.5 * (s + theta); }

double toy_dphi_dtheta(double s, double theta) noexcept { return 0.5 * (s + theta); }

const std::vector<double> &ToySeries::series(ToyQuantity q) const {
  switch (q) {
  case ToyQuantity::SBeta: return s_ep;
  case ToyQuantity::DsEp: return d_s_ep;
  case ToyQuantity::DthetaEp: return d_theta_ep;
  case ToyQuantity::DsCep: return d_s_cep;
  case ToyQuantity::DthetaCep: return d_theta_cep;
  case ToyQuantity::GsRbp: return g_s_rbp;
  case ToyQuantity::GthetaRbp: return g_theta_rbp;
  case ToyQuantity::GsBptt: return g_s_bptt;
  case ToyQuantity::GthetaBptt: return g_theta_bptt;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown toy quantity");
}

ToySeries toy_simulate(const ToyParams &p) {
  p.validate();
  ToySeries out;
  const double th = p.theta, b = p.beta;

  out.s_free.push_back(0.0);
  for (int t = 0; t < p.T; ++t)
    out.s_free.push_back(toy_transition(out.s_free.back(), th));
  const double s_T = out.s_free.back();

  out.s_ep.push_back(s_T);
  for (int t = 0; t < p.K; ++t) {
    const double s = out.s_ep.back();
    const double next = toy_transition(s, th) - b * s;
    out.d_s_ep.push_back((next - s) / b);
    out.d_theta_ep.push_back((toy_dphi_dtheta(next, th) - toy_dphi_dtheta(s, th)) / b);
    out.s_ep.push_back(next);
  }

  out.s_cep.push_back(s_T);
  out.theta_cep.push_back(th);
  for (int t = 0; t < p.K; ++t) {
    const double s = out.s_cep.back(), theta_t = out.theta_cep.back();
    const double next = toy_transition(s, theta_t) - b * s;
    const double dtheta = (toy_dphi_dtheta(next, theta_t) - toy_dphi_dtheta(s, theta_t)) / b;
    out.d_s_cep.push_back((next - s) / b);
    out.d_theta_cep.push_back(dtheta);
    out.s_cep.push_back(next);
    out.theta_cep.push_back(theta_t + p.eta * dtheta);
  }

  // dF/ds = dF/dtheta = 1/2 everywhere; dl/ds = s.
  double g = s_T;
  for (int t = 0; t < p.K; ++t) {
    out.g_s_bptt.push_back(g);
    out.g_theta_bptt.push_back(0.5 * g);
    g *= 0.5;
  }
  const double s_star = th;
  g = s_star;
  for (int t = 0; t < p.K; ++t) {
    out.g_s_rbp.push_back(g);
    out.g_theta_rbp.push_back(0.5 * g);
    g *= 0.5;
  }
  return out;
}

LayeredNetwork toy_network(double theta) {
  LayeredNetwork net =
      LayeredNetwork::zeros({1}, 1, true, ActivationKind::Identity, DynamicsMode::RealTime, 0.5);
  net.input_weights()(0, 0) = theta;
  return net;
}

void write_toy_csv(std::ostream &out, const ToyParams &p, const ToySeries &s) {
  out << "# theta=" << p.theta << " beta=" << p.beta << " eta=" << p.eta << " T=" << p.T
      << " K=" << p.K << "\n";
  out << "t,s_free,s_ep,s_cep,theta_cep,d_s_ep,d_theta_ep,d_s_cep,d_theta_cep,"
         "g_s_rbp,g_theta_rbp,g_s_bptt,g_theta_bptt\n";
  out << std::setprecision(17);
  auto cell = [&out](const std::vector<double> &v, int t) {
    out << ",";
    if (t < static_cast<int>(v.size()))
      out << v[static_cast<std::size_t>(t)];
  };
  for (int t = 0; t <= p.K; ++t) {
    out << t;
    for (const auto *v : {&s.s_free, &s.s_ep, &s.s_cep, &s.theta_cep, &s.d_s_ep, &s.d_theta_ep,
                          &s.d_s_cep, &s.d_theta_cep, &s.g_s_rbp, &s.g_theta_rbp, &s.g_s_bptt,
                          &s.g_theta_bptt})
      cell(*v, t);
    out << "\n";
  }
}

} // namespace eqprop
