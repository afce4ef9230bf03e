// SPDX-License-Identifier: Apache-2.0

#include "eqprop/gdd.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace eqprop {

namespace {

NetworkState state_difference(const NetworkState &next, const NetworkState &cur, double scale) {
  NetworkState d = next;
  for (std::size_t n = 0; n < d.layers.size(); ++n)
    for (std::size_t i = 0; i < d.layers[n].size(); ++i)
      d.layers[n][i] = scale * (next.layers[n][i] - cur.layers[n][i]);
  return d;
}

void check_record(const SecondPhaseRecord &record) {
  if (record.states.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "second-phase record has no steps");
  if (record.params.size() != record.states.size())
    throw Error(ErrorCode::DimensionMismatch, "record states and params differ in length");
  if (record.beta == 0.0)
    throw Error(ErrorCode::InvalidArgument, "record has beta = 0");
}

// The RealTime nudge is beta * epsilon * (y - s^0), so states are normalised
// by beta * epsilon. The parameter terms already omit the epsilon of
// dPhi/dtheta and keep 1 / beta.
double state_scale(const SecondPhaseRecord &record, const LayeredNetwork &net) {
  const double eps = net.mode == DynamicsMode::RealTime ? net.epsilon : 1.0;
  return 1.0 / (record.beta * eps);
}

} // namespace

UpdateSeries normalized_updates_ep(const SecondPhaseRecord &record, const LayeredNetwork &net) {
  check_record(record);
  UpdateSeries u;
  u.algorithm = Algorithm::EP;
  u.beta = record.beta;
  u.eta = record.eta;
  u.from_states.assign(net.block_count(), true);
  const Vector x_eff = effective_input(net, record.x);
  const double inv = 1.0 / record.beta;
  const double s_inv = state_scale(record, net);
  for (std::size_t t = 0; t + 1 < record.states.size(); ++t) {
    u.state_updates.push_back(state_difference(record.states[t + 1], record.states[t], s_inv));
    ParamSet p = zeros_like(net.params);
    accumulate_normalized_update(net, Algorithm::EP, x_eff, record.states[t],
                                 record.states[t + 1], inv, p);
    u.param_updates.push_back(std::move(p));
  }
  return u;
}

UpdateSeries normalized_updates_continual(const SecondPhaseRecord &record,
                                          const LayeredNetwork &net) {
  check_record(record);
  if (record.algorithm == Algorithm::EP)
    throw Error(ErrorCode::InvalidArgument, "normalized_updates_continual: EP record");
  if (record.eta.size() != net.block_count())
    throw Error(ErrorCode::DimensionMismatch, "record carries one rate per block");
  UpdateSeries u;
  u.algorithm = record.algorithm;
  u.beta = record.beta;
  u.eta = record.eta;
  u.from_states.resize(net.block_count());
  for (std::size_t b = 0; b < net.block_count(); ++b)
    u.from_states[b] = record.eta[b] == 0.0;
  const Vector x_eff = effective_input(net, record.x);
  const double inv = 1.0 / record.beta;
  const double s_inv = state_scale(record, net);
  for (std::size_t t = 0; t + 1 < record.states.size(); ++t) {
    u.state_updates.push_back(state_difference(record.states[t + 1], record.states[t], s_inv));
    ParamSet p = zeros_like(net.params);
    accumulate_normalized_update(net, record.algorithm, x_eff, record.states[t],
                                 record.states[t + 1], inv, p, u.from_states);
    for (std::size_t b = 0; b < net.block_count(); ++b) {
      if (u.from_states[b])
        continue;
      const auto next = record.params[t + 1][b].flat();
      const auto cur = record.params[t][b].flat();
      auto out = p[b].flat();
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (next[i] - cur[i]) / record.eta[b];
    }
    u.param_updates.push_back(std::move(p));
  }
  return u;
}

const BlockComparison &GddReport::block(std::string_view name) const {
  for (const auto &b : blocks)
    if (b.name == name)
      return b;
  throw Error(ErrorCode::InvalidArgument, "report has no block '" + std::string(name) + "'");
}

std::optional<double> GddReport::min_cosine() const {
  std::optional<double> lo;
  for (const auto &b : blocks)
    for (const auto &c : b.cosine)
      if (c && (!lo || *c < *lo))
        lo = c;
  return lo;
}

namespace {

double sq_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v)
    acc += x * x;
  return acc;
}

struct Metrics {
  std::optional<double> cosine, rel_mse, sign_frac;
};

// Metrics of update d against target -g.
Metrics compare(std::span<const double> d, std::span<const double> g) {
  Metrics m;
  double dd = 0.0, gg = 0.0, dg = 0.0, err = 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    dd += d[i] * d[i];
    gg += g[i] * g[i];
    dg -= d[i] * g[i];
    const double e = d[i] + g[i];
    err += e * e;
    const int sd = (d[i] > 0) - (d[i] < 0);
    const int sg = (-g[i] > 0) - (-g[i] < 0);
    agree += sd == sg ? 1 : 0;
  }
  if (dd == 0.0 || gg == 0.0)
    return m;
  m.cosine = std::clamp(dg / (std::sqrt(dd) * std::sqrt(gg)), -1.0, 1.0);
  m.rel_mse = err / gg;
  m.sign_frac = static_cast<double>(agree) / static_cast<double>(d.size());
  return m;
}

BlockComparison compare_series(std::string name, const std::vector<Vector> &upd,
                               const std::vector<Vector> &grad) {
  BlockComparison bc;
  bc.name = std::move(name);
  double max_u = 0.0, max_g = 0.0;
  for (std::size_t t = 0; t < upd.size(); ++t) {
    max_u = std::max(max_u, std::sqrt(sq_norm(upd[t])));
    max_g = std::max(max_g, std::sqrt(sq_norm(grad[t])));
  }
  Vector tot_u(upd.front().size(), 0.0), tot_g(upd.front().size(), 0.0);
  for (std::size_t t = 0; t < upd.size(); ++t) {
    const double nu = std::sqrt(sq_norm(upd[t])), ng = std::sqrt(sq_norm(grad[t]));
    if (nu <= kUndefinedRelNorm * max_u || ng <= kUndefinedRelNorm * max_g) {
      bc.cosine.emplace_back();
      bc.rel_mse.emplace_back();
      bc.sign_frac.emplace_back();
    } else {
      const Metrics m = compare(upd[t], grad[t]);
      bc.cosine.push_back(m.cosine);
      bc.rel_mse.push_back(m.rel_mse);
      bc.sign_frac.push_back(m.sign_frac);
    }
    for (std::size_t i = 0; i < tot_u.size(); ++i) {
      tot_u[i] += upd[t][i];
      tot_g[i] += grad[t][i];
    }
  }
  const Metrics tot = compare(tot_u, tot_g);
  if (tot.cosine) {
    Vector neg_g(tot_g.size());
    for (std::size_t i = 0; i < neg_g.size(); ++i)
      neg_g[i] = -tot_g[i];
    bc.total_angle_deg = angle_between(tot_u, neg_g);
  }
  bc.total_rel_mse = tot.rel_mse;
  bc.total_sign_frac = tot.sign_frac;
  return bc;
}

} // namespace

GddReport gdd_report(const LayeredNetwork &net, const UpdateSeries &updates,
                     const GradientSeries &grads) {
  const std::size_t K = updates.state_updates.size();
  if (K == 0)
    throw Error(ErrorCode::InvalidArgument, "gdd_report: empty update series");
  if (grads.param_grads.size() < K || grads.state_grads.size() < K)
    throw Error(ErrorCode::DimensionMismatch, "gdd_report: gradient series shorter than updates");
  GddReport report;
  const std::size_t layers = net.layer_count();
  for (std::size_t n = 0; n < layers; ++n) {
    std::vector<Vector> u, g;
    for (std::size_t t = 0; t < K; ++t) {
      u.push_back(updates.state_updates[t].layers.at(n));
      g.push_back(grads.state_grads[t].layers.at(n));
      if (u.back().size() != g.back().size())
        throw Error(ErrorCode::DimensionMismatch, "gdd_report: state shapes differ");
    }
    report.blocks.push_back(compare_series("s" + std::to_string(n), u, g));
  }
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    std::vector<Vector> u, g;
    for (std::size_t t = 0; t < K; ++t) {
      const auto uf = updates.param_updates[t].at(b).flat();
      const auto gf = grads.param_grads[t].at(b).flat();
      if (uf.size() != gf.size())
        throw Error(ErrorCode::DimensionMismatch, "gdd_report: parameter shapes differ");
      u.emplace_back(uf.begin(), uf.end());
      g.emplace_back(gf.begin(), gf.end());
    }
    report.blocks.push_back(compare_series(net.block_name(b), u, g));
  }
  std::vector<Vector> u, g;
  for (std::size_t t = 0; t < K; ++t) {
    u.push_back(flatten(updates.param_updates[t]));
    g.push_back(flatten(grads.param_grads[t]));
  }
  report.blocks.push_back(compare_series("all_params", u, g));
  report.total_angle_deg = report.blocks.back().total_angle_deg;
  return report;
}

namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(const std::optional<double> &v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> get() const {
    return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
};

} // namespace

GddReport average_reports(std::span<const GddReport> reports) {
  if (reports.empty())
    throw Error(ErrorCode::InvalidArgument, "average_reports: no reports");
  GddReport avg = reports.front();
  for (std::size_t b = 0; b < avg.blocks.size(); ++b) {
    BlockComparison &out = avg.blocks[b];
    for (std::size_t t = 0; t < out.cosine.size(); ++t) {
      Mean c, r, s;
      for (const auto &rep : reports) {
        c.add(rep.blocks[b].cosine[t]);
        r.add(rep.blocks[b].rel_mse[t]);
        s.add(rep.blocks[b].sign_frac[t]);
      }
      out.cosine[t] = c.get();
      out.rel_mse[t] = r.get();
      out.sign_frac[t] = s.get();
    }
    Mean a, r, s;
    for (const auto &rep : reports) {
      a.add(rep.blocks[b].total_angle_deg);
      r.add(rep.blocks[b].total_rel_mse);
      s.add(rep.blocks[b].total_sign_frac);
    }
    out.total_angle_deg = a.get();
    out.total_rel_mse = r.get();
    out.total_sign_frac = s.get();
  }
  avg.total_angle_deg = avg.blocks.back().total_angle_deg;
  return avg;
}

std::vector<GddRow> gdd_sweep(const LayeredNetwork &net, Algorithm algo, const Hyperparams &hyper,
                              std::span<const Vector> xs, std::span<const Vector> ys,
                              std::span<const double> betas,
                              std::span<const std::vector<double>> etas) {
  if (xs.empty() || xs.size() != ys.size())
    throw Error(ErrorCode::InvalidArgument, "gdd_sweep: need matching, non-empty samples");
  std::vector<Trajectory> free;
  std::vector<GradientSeries> grads;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    free.push_back(run_free_phase(net, xs[i], hyper));
    grads.push_back(bptt_gradients(net, xs[i], free.back(), ys[i], hyper.K));
  }
  std::size_t unsettled = 0;
  for (const auto &f : free)
    unsettled += f.converged ? 0 : 1;
  std::vector<GddRow> rows;
  for (double beta : betas) {
    for (const auto &eta : etas) {
      Hyperparams h = hyper;
      h.beta = beta;
      h.lr_per_layer = eta;
      std::vector<GddReport> reports;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const NetworkState &s_star = free[i].steady_state();
        UpdateSeries upd;
        switch (algo) {
        case Algorithm::EP:
          upd = normalized_updates_ep(run_nudged_ep(net, s_star, xs[i], ys[i], h), net);
          break;
        case Algorithm::CEP:
          upd = normalized_updates_continual(run_nudged_cep(net, s_star, xs[i], ys[i], h), net);
          break;
        case Algorithm::CVF:
          upd = normalized_updates_continual(run_nudged_cvf(net, s_star, xs[i], ys[i], h), net);
          break;
        }
        reports.push_back(gdd_report(net, upd, grads[i]));
      }
      rows.push_back({algo, beta, eta, xs.size(), unsettled, average_reports(reports)});
      if (algo == Algorithm::EP)
        break; // frozen weights: the rates do not matter
    }
  }
  return rows;
}

std::string join_rates(std::span<const double> rates) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (std::size_t i = 0; i < rates.size(); ++i)
    os << (i ? "-" : "") << rates[i];
  return rates.empty() ? "0" : os.str();
}

namespace {

void put(std::ostream &out, const std::optional<double> &v) {
  if (v)
    out << *v;
  else
    out << "undef";
}

} // namespace

void write_gdd_csv(std::ostream &out, std::span<const GddRow> rows, DynamicsMode mode,
                   const std::string &layers) {
  out << "# per-step rows: cosine(Delta(t), -grad(t)), |Delta+grad|^2/|grad|^2, sign agreement\n"
         "# rows with t=-1 summarise the totals; their cosine column holds total_angle_deg\n"
         "# undef marks steps where the update or the gradient vanishes\n";
  out << "algo,mode,layers,beta,eta,t,block,cosine,rel_mse,sign_frac\n";
  out << std::setprecision(10);
  for (const auto &row : rows) {
    const std::string prefix = std::string(to_string(row.algorithm)) + "," +
                               std::string(to_string(mode)) + "," + layers + ",";
    std::ostringstream beta;
    beta << std::setprecision(6) << row.beta;
    const std::string head = prefix + beta.str() + "," + join_rates(row.eta) + ",";
    for (const auto &b : row.report.blocks) {
      for (std::size_t t = 0; t < b.cosine.size(); ++t) {
        out << head << t << "," << b.name << ",";
        put(out, b.cosine[t]);
        out << ",";
        put(out, b.rel_mse[t]);
        out << ",";
        put(out, b.sign_frac[t]);
        out << "\n";
      }
      out << head << -1 << "," << b.name << ",";
      put(out, b.total_angle_deg);
      out << ",";
      put(out, b.total_rel_mse);
      out << ",";
      put(out, b.total_sign_frac);
      out << "\n";
    }
  }
}

} // namespace eqprop
