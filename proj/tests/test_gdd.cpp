// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "eqprop/gdd.hpp"
#include "eqprop/toy.hpp"
#include "support.hpp"

using namespace eqprop;
using testing::max_abs_diff;
using testing::random_net;

namespace {

Hyperparams hyper(int T, int K, double beta, std::vector<double> lr = {}) {
  Hyperparams h;
  h.T = T;
  h.K = K;
  h.beta = beta;
  h.lr_per_layer = std::move(lr);
  return h;
}

struct Fixture {
  LayeredNetwork net;
  Vector x, y;
  Trajectory free;

  explicit Fixture(ActivationKind act = ActivationKind::Tanh, double scale = 0.4,
                   std::uint64_t seed = 21)
      : net(random_net({3, 6, 5}, 8, true, act, DynamicsMode::DiscreteTime, scale, seed)),
        x(testing::random_vector(8, seed + 1)), y{1.0, 0.0, 0.0},
        free(run_free_phase(net, x, hyper(400, 1, 0.1))) {}

  const NetworkState &s_star() const { return free.steady_state(); }

  GradientSeries bptt(int K) const { return bptt_gradients(net, x, free, y, K); }

  UpdateSeries ep(double beta, int K) const {
    return normalized_updates_ep(run_nudged_ep(net, s_star(), x, y, hyper(1, K, beta)), net);
  }

  UpdateSeries cep(double beta, double eta, int K) const {
    return normalized_updates_continual(
        run_nudged_cep(net, s_star(), x, y, hyper(1, K, beta, {eta, eta})), net);
  }
};

UpdateSeries negated(const GradientSeries &g) {
  UpdateSeries u;
  u.beta = 1.0;
  for (std::size_t t = 0; t < g.param_grads.size(); ++t) {
    NetworkState s = g.state_grads[t];
    for (auto &l : s.layers)
      for (double &v : l)
        v = -v;
    ParamSet p = g.param_grads[t];
    for (auto &m : p)
      for (double &v : m.flat())
        v = -v;
    u.state_updates.push_back(std::move(s));
    u.param_updates.push_back(std::move(p));
  }
  u.from_states.assign(g.param_grads.front().size(), false);
  return u;
}

} // namespace

TEST_CASE("equilibrium target gives an all-zero series") {
  Fixture f;
  const auto rec = run_nudged_ep(f.net, f.s_star(), f.x, f.s_star().layers[0], hyper(1, 5, 0.1));
  const UpdateSeries u = normalized_updates_ep(rec, f.net);
  for (const auto &s : u.state_updates)
    CHECK(max_abs_diff(s, NetworkState::zeros(f.net)) < 1e-10);
  for (const auto &p : u.param_updates)
    CHECK(max_abs_diff(p, zeros_like(f.net.params)) < 1e-10);
}

TEST_CASE("scalar embedding normalised updates") {
  const LayeredNetwork net = toy_network(1.0);
  const NetworkState s_star{{Vector{1.0}}};
  const Vector x{1.0}, y{0.0};
  const auto ep = normalized_updates_ep(run_nudged_ep(net, s_star, x, y, hyper(1, 3, 0.2)), net);
  CHECK(ep.state_updates[1].layers[0][0] == doctest::Approx(-0.4).epsilon(1e-14));
  const auto cep = normalized_updates_continual(
      run_nudged_cep(net, s_star, x, y, hyper(1, 3, 0.2, {0.01})), net);
  CHECK(cep.state_updates[0].layers[0][0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(cep.param_updates[0][0](0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("EP parameter updates telescope") {
  Fixture f;
  const double beta = 0.05;
  const auto rec = run_nudged_ep(f.net, f.s_star(), f.x, f.y, hyper(1, 10, beta));
  const UpdateSeries u = normalized_updates_ep(rec, f.net);
  ParamSet sum = zeros_like(f.net.params);
  for (const auto &p : u.param_updates)
    for (std::size_t b = 0; b < sum.size(); ++b)
      axpy(1.0, p[b].flat(), sum[b].flat());
  const ParamSet end = phi_param_terms(f.net, f.x, rec.states.back());
  const ParamSet start = phi_param_terms(f.net, f.x, rec.states.front());
  for (std::size_t b = 0; b < sum.size(); ++b)
    for (std::size_t i = 0; i < sum[b].size(); ++i)
      CHECK(std::abs(sum[b].flat()[i] - (end[b].flat()[i] - start[b].flat()[i]) / beta) < 1e-12);
}

TEST_CASE("C-EP at zero rate is EP, report by report") {
  Fixture f;
  const GradientSeries g = f.bptt(10);
  const GddReport a = gdd_report(f.net, f.ep(0.01, 10), g);
  const GddReport b = gdd_report(f.net, f.cep(0.01, 0.0, 10), g);
  REQUIRE(a.blocks.size() == b.blocks.size());
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const auto &x = a.blocks[i], &y = b.blocks[i];
    CHECK(x.name == y.name);
    for (std::size_t t = 0; t < x.cosine.size(); ++t) {
      REQUIRE(x.cosine[t].has_value() == y.cosine[t].has_value());
      if (x.cosine[t]) {
        CHECK(std::abs(*x.cosine[t] - *y.cosine[t]) <= 1e-14);
        CHECK(std::abs(*x.rel_mse[t] - *y.rel_mse[t]) <= 1e-14 * (1 + *x.rel_mse[t]));
        CHECK(*x.sign_frac[t] == *y.sign_frac[t]);
      }
    }
  }
  CHECK(std::abs(*a.total_angle_deg - *b.total_angle_deg) <= 1e-12);
}

TEST_CASE("reports against exact gradients") {
  Fixture f;
  const GradientSeries g = f.bptt(8);
  const UpdateSeries perfect = negated(g);
  const GddReport r = gdd_report(f.net, perfect, g);
  CHECK(*r.total_angle_deg == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  for (const auto &b : r.blocks)
    for (const auto &c : b.cosine)
      if (c)
        CHECK(*c == doctest::Approx(1.0).epsilon(1e-12));
  UpdateSeries opposite = perfect;
  for (auto &p : opposite.param_updates)
    for (auto &m : p)
      for (double &v : m.flat())
        v = -v;
  CHECK(*gdd_report(f.net, opposite, g).total_angle_deg == doctest::Approx(180.0).epsilon(1e-9));
}

TEST_CASE("undefined steps are reported, not zero") {
  Fixture f;
  const GradientSeries g = f.bptt(6);
  const GddReport r = gdd_report(f.net, f.ep(0.01, 6), g);
  // The nudge reaches the hidden layer only at the second step.
  CHECK_FALSE(r.block("s1").cosine[0].has_value());
  CHECK(r.block("s0").cosine[0].has_value());
  CHECK(*r.block("s0").cosine[0] == doctest::Approx(1.0).epsilon(1e-12));
  std::ostringstream out;
  const std::vector<GddRow> rows{{Algorithm::EP, 0.01, {0.0, 0.0}, 1, 0, r}};
  write_gdd_csv(out, rows, DynamicsMode::DiscreteTime, "8-6-3");
  CHECK(out.str().find(",undef,undef,undef") != std::string::npos);
  CHECK(out.str().find("algo,mode,layers,beta,eta,t,block,cosine,rel_mse,sign_frac") !=
        std::string::npos);
}

TEST_CASE("total angle is invariant to scaling the updates") {
  Fixture f;
  const GradientSeries g = f.bptt(10);
  const UpdateSeries u = f.ep(0.05, 10);
  const double base = *gdd_report(f.net, u, g).total_angle_deg;
  for (double c : {1e-3, 0.5, 3.0, 1e4}) {
    UpdateSeries scaled = u;
    for (auto &p : scaled.param_updates)
      for (auto &m : p)
        for (double &v : m.flat())
          v *= c;
    CHECK(*gdd_report(f.net, scaled, g).total_angle_deg == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("EP updates approach RBP gradients as beta halves") {
  // Linear dynamics, small weights: the error of the finite-beta estimate is O(beta).
  Fixture f(ActivationKind::Identity, 0.15, 5);
  REQUIRE(f.free.final_residual < 1e-12);
  const int K = 10;
  const GradientSeries rbp = rbp_gradients(f.net, f.x, f.s_star(), f.y, K, 1e-12);
  std::vector<double> errs;
  for (double beta : {0.08, 0.04, 0.02, 0.01}) {
    const UpdateSeries u = f.ep(beta, K);
    double worst = 0.0;
    for (int t = 0; t < K; ++t) {
      Vector d = flatten(u.param_updates[t]);
      const Vector g = flatten(rbp.param_grads[t]);
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] += g[i];
      worst = std::max(worst, norm2(d));
    }
    errs.push_back(worst);
  }
  for (std::size_t i = 1; i < errs.size(); ++i)
    CHECK(errs[i] / errs[i - 1] < 0.75);
}

TEST_CASE("total angle shrinks as eta goes to zero") {
  Fixture f;
  const GradientSeries g = f.bptt(10);
  double prev = 1e300;
  for (double eta : {1e-3, 1e-4, 1e-5, 0.0}) {
    const double a = *gdd_report(f.net, f.cep(0.01, eta, 10), g).total_angle_deg;
    CHECK(a <= prev + 0.1);
    prev = a;
  }
}

TEST_CASE("sweep rows and the beta trend") {
  Fixture f;
  const std::vector<Vector> xs{f.x, testing::random_vector(8, 300)};
  const std::vector<Vector> ys{f.y, Vector{0.0, 1.0, 0.0}};
  const std::vector<double> betas{0.01, 0.02};
  const std::vector<std::vector<double>> etas{{0.0, 0.0}, {1e-4, 1e-4}};
  Hyperparams h = hyper(400, 10, 0.01);
  const auto cep = gdd_sweep(f.net, Algorithm::CEP, h, xs, ys, betas, etas);
  CHECK(cep.size() == 4);
  const auto ep = gdd_sweep(f.net, Algorithm::EP, h, xs, ys, betas, etas);
  CHECK(ep.size() == 2);
  CHECK(ep[0].samples == 2);
  CHECK(*ep[1].report.total_angle_deg > *ep[0].report.total_angle_deg);
  CHECK(*cep[1].report.total_angle_deg > *cep[0].report.total_angle_deg);
}

TEST_CASE("averaging identical reports is the identity") {
  Fixture f;
  const GddReport r = gdd_report(f.net, f.ep(0.01, 6), f.bptt(6));
  const std::vector<GddReport> two{r, r};
  const GddReport avg = average_reports(two);
  CHECK(*avg.total_angle_deg == doctest::Approx(*r.total_angle_deg).epsilon(1e-14));
  CHECK(*avg.min_cosine() == doctest::Approx(*r.min_cosine()).epsilon(1e-14));
}

TEST_CASE("scalar embedding: tiny beta and eta give a near-zero angle") {
  const LayeredNetwork net = toy_network(1.0);
  const Vector x{1.0}, y{0.0};
  Hyperparams h = hyper(100, 30, 2 * 0.01, {1e-5});
  const Trajectory free = run_free_phase(net, x, h);
  const UpdateSeries u = normalized_updates_continual(
      run_nudged_cep(net, free.steady_state(), x, y, h), net);
  const GradientSeries g = bptt_gradients(net, x, free, y, 30);
  const GddReport r = gdd_report(net, u, g);
  CHECK(*r.total_angle_deg < 1.0);
  CHECK(*r.block("s0").total_angle_deg < 1.0);
}

TEST_CASE("join_rates formatting") {
  CHECK(join_rates(std::vector<double>{0.08, 0.04}) == "0.08-0.04");
  CHECK(join_rates(std::vector<double>{2e-5, 2e-5}) == "2e-05-2e-05");
}
