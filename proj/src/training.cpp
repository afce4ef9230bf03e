// SPDX-License-Identifier: Apache-2.0

#include "eqprop/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "eqprop/parallel.hpp"
#include "eqprop/rng.hpp"

namespace eqprop {

NetSpec NetSpec::from_layers(std::string_view layers) {
  std::vector<std::size_t> sizes;
  std::size_t pos = 0;
  while (pos <= layers.size()) {
    const std::size_t dash = std::min(layers.find('-', pos), layers.size());
    const std::string part(layers.substr(pos, dash - pos));
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (part.empty() || used != part.size() || v == 0)
      throw Error(ErrorCode::ParseError, "bad layer list '" + std::string(layers) + "'");
    sizes.push_back(v);
    pos = dash + 1;
  }
  if (sizes.size() < 2)
    throw Error(ErrorCode::ParseError, "layer list needs an input and an output size");
  NetSpec spec;
  spec.input_size = sizes.front();
  spec.layer_sizes.assign(sizes.rbegin(), sizes.rend() - 1);
  return spec;
}

std::string NetSpec::layers_label() const {
  std::string s = std::to_string(input_size);
  for (auto it = layer_sizes.rbegin(); it != layer_sizes.rend(); ++it)
    s += "-" + std::to_string(*it);
  return s;
}

LayeredNetwork glorot_init(const NetSpec &spec, std::uint64_t seed) {
  LayeredNetwork net = LayeredNetwork::zeros(spec.layer_sizes, spec.input_size, spec.tied,
                                             spec.activation, spec.mode, spec.epsilon);
  auto rng = make_rng(seed, RngStream::Init);
  for (auto &m : net.params) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double &w : m.flat())
      w = dist(rng);
  }
  return net;
}

std::vector<Matrix> angle_controlled_init(std::span<const Matrix> theta_f, double psi_deg,
                                          std::uint64_t seed) {
  if (!(psi_deg >= 0.0 && psi_deg <= 180.0))
    throw Error(ErrorCode::InvalidArgument, "target angle must lie in [0, 180]");
  const double p = 0.5 * (1.0 - std::cos(psi_deg * std::numbers::pi / 180.0));
  auto rng = make_rng(seed, RngStream::Mask);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Matrix> out;
  for (const Matrix &f : theta_f) {
    Matrix b = f.transposed();
    for (double &w : b.flat()) {
      // Exact endpoints: no draw can flip at p = 0, every draw flips at p = 1.
      const bool flip = p >= 1.0 || (p > 0.0 && unit(rng) < p);
      if (flip)
        w = -w;
    }
    out.push_back(std::move(b));
  }
  return out;
}

void set_feedback_angle(LayeredNetwork &net, double psi_deg, std::uint64_t seed) {
  if (net.tied)
    throw Error(ErrorCode::InvalidArgument, "feedback angle needs an untied network");
  const std::size_t n_hidden = net.hidden_count();
  const std::vector<Matrix> fb = angle_controlled_init(
      std::span<const Matrix>(net.params.data(), n_hidden), psi_deg, seed);
  for (std::size_t n = 0; n < n_hidden; ++n)
    net.backward(n) = fb[n];
}

double feedback_angle(const LayeredNetwork &net) {
  if (net.tied)
    return 0.0;
  Vector f, b;
  for (std::size_t n = 0; n < net.hidden_count(); ++n) {
    const auto ff = net.forward(n).flat();
    f.insert(f.end(), ff.begin(), ff.end());
    const Matrix bt = net.backward(n).transposed();
    b.insert(b.end(), bt.flat().begin(), bt.flat().end());
  }
  return angle_between(f, b);
}

double draw_beta(const Hyperparams &hyper, std::mt19937_64 &rng) {
  if (!hyper.random_beta)
    return hyper.beta;
  std::bernoulli_distribution coin(0.5);
  return coin(rng) ? std::abs(hyper.beta) : -std::abs(hyper.beta);
}

namespace {

std::size_t argmax(const Vector &v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct FreeBatch {
  std::vector<NetworkState> steady;
  std::vector<char> ok;
  std::size_t correct = 0;
  std::size_t skipped = 0;
};

FreeBatch free_phase_batch(const LayeredNetwork &net, const Batch &batch, int T) {
  const std::size_t B = batch.inputs.size();
  FreeBatch fb;
  fb.steady.resize(B);
  fb.ok.assign(B, 0);
  parallel_for(B, [&](std::size_t i) {
    try {
      fb.steady[i] = relax(net, batch.inputs[i], T).state;
      fb.ok[i] = 1;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::Divergence)
        throw;
    }
  });
  for (std::size_t i = 0; i < B; ++i) {
    if (!fb.ok[i]) {
      ++fb.skipped;
      continue;
    }
    if (static_cast<int>(argmax(fb.steady[i].layers[0])) == batch.labels[i])
      ++fb.correct;
  }
  return fb;
}

void check_skips(std::size_t skipped, std::size_t total) {
  if (total > 0 && 10 * skipped > total)
    throw Error(ErrorCode::Divergence, std::to_string(skipped) + " of " + std::to_string(total) +
                                           " samples diverged in one mini-batch");
}

void check_algorithm(const LayeredNetwork &net, Algorithm algo) {
  if ((algo == Algorithm::EP || algo == Algorithm::CEP) && !net.tied)
    throw Error(ErrorCode::UntiedNetwork, std::string(to_string(algo)) + " needs tied weights");
  if (algo == Algorithm::CVF && net.tied)
    throw Error(ErrorCode::InvalidArgument, "C-VF needs untied weights");
}

// EP: (1/beta) mean over kept samples of dPhi/dtheta(s_K^beta) - dPhi/dtheta(s_*).
ParamSet ep_direction(const LayeredNetwork &net, const Batch &batch, const FreeBatch &fb,
                      const Hyperparams &hyper, double beta, std::size_t &skipped) {
  const std::size_t B = batch.inputs.size();
  std::vector<NetworkState> nudged(B);
  std::vector<char> ok = fb.ok;
  Hyperparams h = hyper;
  h.beta = beta;
  parallel_for(B, [&](std::size_t i) {
    if (!ok[i])
      return;
    try {
      nudged[i] = run_nudged_ep(net, fb.steady[i], batch.inputs[i], batch.targets[i], h)
                      .states.back();
    } catch (const Error &e) {
      if (e.code() != ErrorCode::Divergence)
        throw;
      ok[i] = 0;
    }
  });
  std::size_t active = 0;
  for (char k : ok)
    active += k ? 1 : 0;
  skipped = B - active;
  ParamSet dir = zeros_like(net.params);
  if (active == 0)
    return dir;
  const double scale = 1.0 / (beta * static_cast<double>(active));
  for (std::size_t i = 0; i < B; ++i)
    if (ok[i])
      accumulate_normalized_update(net, Algorithm::EP, effective_input(net, batch.inputs[i]),
                                   fb.steady[i], nudged[i], scale, dir);
  return dir;
}

std::pair<std::vector<Vector>, std::vector<Vector>> kept(const Batch &batch, const FreeBatch &fb,
                                                         std::vector<NetworkState> &starts) {
  std::vector<Vector> xs, ys;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    if (!fb.ok[i])
      continue;
    xs.push_back(batch.inputs[i]);
    ys.push_back(batch.targets[i]);
    starts.push_back(fb.steady[i]);
  }
  return {std::move(xs), std::move(ys)};
}

} // namespace

ParamSet ep_batch_update(const LayeredNetwork &net, const Batch &batch, const Hyperparams &hyper,
                         double beta) {
  check_algorithm(net, Algorithm::EP);
  const FreeBatch fb = free_phase_batch(net, batch, hyper.T);
  std::size_t skipped = 0;
  ParamSet dir = ep_direction(net, batch, fb, hyper, beta, skipped);
  for (std::size_t b = 0; b < dir.size(); ++b) {
    const double eta = hyper.rate_for_block(net, b);
    for (double &v : dir[b].flat())
      v *= eta;
  }
  return dir;
}

MinibatchResult train_minibatch(LayeredNetwork &net, Algorithm algo, const Batch &batch,
                                const Hyperparams &hyper, double beta) {
  check_algorithm(net, algo);
  if (beta == 0.0)
    throw Error(ErrorCode::InvalidArgument, "beta must be non-zero");
  const std::size_t B = batch.inputs.size();
  const FreeBatch fb = free_phase_batch(net, batch, hyper.T);
  MinibatchResult res;
  res.samples = B;
  res.correct = fb.correct;
  check_skips(fb.skipped, B);
  const std::vector<double> rates = block_rates(net, hyper);

  if (algo == Algorithm::EP) {
    std::size_t skipped = 0;
    const ParamSet dir = ep_direction(net, batch, fb, hyper, beta, skipped);
    res.skipped = skipped;
    check_skips(skipped, B);
    for (std::size_t b = 0; b < net.block_count(); ++b)
      if (rates[b] != 0.0)
        axpy(rates[b], dir[b].flat(), net.params[b].flat());
    return res;
  }

  std::vector<NetworkState> starts;
  auto [xs, ys] = kept(batch, fb, starts);
  const ContinualBatchResult r =
      run_continual_batch(net, algo, xs, ys, std::move(starts), beta, rates, hyper.K, true);
  res.skipped = fb.skipped + static_cast<std::size_t>(
                                 std::count(r.skipped.begin(), r.skipped.end(), true));
  check_skips(res.skipped, B);
  return res;
}

MinibatchResult debug_rescaled_cep(LayeredNetwork &net, const Batch &batch,
                                   const Hyperparams &hyper, double beta) {
  check_algorithm(net, Algorithm::CEP);
  if (!(hyper.lr_tiny_scale > 0.0))
    throw Error(ErrorCode::InvalidArgument, "lr_tiny_scale must be positive");
  const std::size_t B = batch.inputs.size();
  const FreeBatch fb = free_phase_batch(net, batch, hyper.T);
  MinibatchResult res;
  res.samples = B;
  res.correct = fb.correct;
  check_skips(fb.skipped, B);
  std::vector<double> rates = block_rates(net, hyper);
  for (double &r : rates)
    r *= hyper.lr_tiny_scale;
  const ParamSet theta0 = net.params;
  std::vector<NetworkState> starts;
  auto [xs, ys] = kept(batch, fb, starts);
  const ContinualBatchResult r = run_continual_batch(net, Algorithm::CEP, xs, ys,
                                                     std::move(starts), beta, rates, hyper.K, true);
  res.skipped = fb.skipped + static_cast<std::size_t>(
                                 std::count(r.skipped.begin(), r.skipped.end(), true));
  check_skips(res.skipped, B);
  const double inv = 1.0 / hyper.lr_tiny_scale;
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    auto out = net.params[b].flat();
    const auto base = theta0[b].flat();
    const auto delta = r.applied[b].flat();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = base[i] + inv * delta[i];
  }
  return res;
}

int predict(const LayeredNetwork &net, std::span<const double> x, int T) {
  return static_cast<int>(argmax(relax(net, x, T).state.layers[0]));
}

double evaluate(const LayeredNetwork &net, const Dataset &data, int T) {
  if (data.size() == 0)
    return 0.0;
  std::vector<char> wrong(data.size(), 1);
  parallel_for(data.size(), [&](std::size_t i) {
    try {
      wrong[i] = predict(net, data.images[i], T) != data.labels[i] ? 1 : 0;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::Divergence)
        throw;
    }
  });
  const auto errors = std::count(wrong.begin(), wrong.end(), 1);
  return 100.0 * static_cast<double>(errors) / static_cast<double>(data.size());
}

void TrainConfig::validate() const {
  if (batch_size < 1)
    throw Error(ErrorCode::InvalidArgument, "batch_size must be at least 1");
  if (epochs < 0)
    throw Error(ErrorCode::InvalidArgument, "epochs must be non-negative");
  if (!(init_angle_deg >= 0.0 && init_angle_deg <= 180.0))
    throw Error(ErrorCode::InvalidArgument, "init_angle_deg must lie in [0, 180]");
  if (rescaled_cep && algorithm != Algorithm::CEP)
    throw Error(ErrorCode::InvalidArgument, "the rescaled debugging step applies to C-EP only");
}

TrainReport train(LayeredNetwork &net, const TrainConfig &cfg, const Dataset &train_set,
                  const Dataset &test_set, const std::function<void(const EpochStats &)> &on_epoch) {
  cfg.validate();
  cfg.hyper.validate(net.mode);
  const auto start = std::chrono::steady_clock::now();
  auto beta_rng = make_rng(cfg.seed, RngStream::BetaSign);
  TrainReport report;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::size_t correct = 0, seen = 0, skipped = 0;
    for (const auto &idx : batches(train_set.size(), cfg.batch_size, cfg.seed,
                                   static_cast<std::uint64_t>(epoch))) {
      const Batch batch = make_batch(train_set, idx, net.layer_sizes[0]);
      const double beta = draw_beta(cfg.hyper, beta_rng);
      const MinibatchResult r = cfg.rescaled_cep
                                    ? debug_rescaled_cep(net, batch, cfg.hyper, beta)
                                    : train_minibatch(net, cfg.algorithm, batch, cfg.hyper, beta);
      correct += r.correct;
      seen += r.samples;
      skipped += r.skipped;
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_err = seen ? 100.0 * (1.0 - static_cast<double>(correct) / static_cast<double>(seen))
                        : 0.0;
    st.test_err = evaluate(net, test_set, cfg.hyper.T);
    st.skipped = skipped;
    report.epochs.push_back(st);
    if (on_epoch)
      on_epoch(st);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_train_csv(std::ostream &out, const TrainReport &report) {
  out << "epoch,train_err,test_err\n";
  out << std::fixed << std::setprecision(2);
  for (const auto &e : report.epochs)
    out << e.epoch << "," << e.train_err << "," << e.test_err << "\n";
  if (!report.epochs.empty()) {
    const auto &last = report.epochs.back();
    std::size_t skipped = 0;
    for (const auto &e : report.epochs)
      skipped += e.skipped;
    out << "# final epochs=" << last.epoch << " train_err=" << last.train_err
        << " test_err=" << last.test_err << " skipped=" << skipped << "\n";
  }
}

} // namespace eqprop
