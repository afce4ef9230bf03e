// SPDX-License-Identifier: Apache-2.0

#include "eqprop/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "eqprop/config.hpp"
#include "eqprop/gdd.hpp"
#include "eqprop/gradients.hpp"
#include "eqprop/parallel.hpp"
#include "eqprop/rng.hpp"
#include "eqprop/toy.hpp"
#include "eqprop/training.hpp"

#ifndef EQPROP_DEFAULT_MNIST_DIR
#define EQPROP_DEFAULT_MNIST_DIR "data/mnist-5k"
#endif

namespace eqprop {

std::filesystem::path resolve_mnist_dir(const std::filesystem::path &flag) {
  if (!flag.empty())
    return flag;
  if (const char *env = std::getenv("EQPROP_MNIST_DIR"); env && *env)
    return env;
  return EQPROP_DEFAULT_MNIST_DIR;
}

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  std::string mnist_dir;
  unsigned threads = 1;
};

RunConfig load_config(const Common &c) {
  RunConfig rc = c.config.empty() ? default_run_config()
                                  : apply_config(ConfigFile::load(c.config));
  if (c.seed_set)
    rc.train.seed = c.seed;
  return rc;
}

// Opens <out>/<name>, or returns nullopt to mean "write to stdout".
std::optional<std::ofstream> open_output(const Common &c, const std::string &name) {
  if (c.out.empty())
    return std::nullopt;
  std::filesystem::create_directories(c.out);
  std::ofstream f(std::filesystem::path(c.out) / name);
  if (!f)
    throw Error(ErrorCode::IoError, "cannot write " + (std::filesystem::path(c.out) / name).string());
  return f;
}

int cmd_toy(const Common &c, const ToyParams &p, std::ostream &out, std::ostream &err) {
  p.validate();
  if (!p.cep_contracts())
    err << "warning: 1 - 2 beta + eta / (2 beta) is outside (-1, 1); the C-EP series diverge\n";
  const ToySeries s = toy_simulate(p);
  auto file = open_output(c, "toy.csv");
  write_toy_csv(file ? *file : out, p, s);
  return kExitOk;
}

int cmd_gdd(const Common &c, std::optional<std::size_t> samples, std::ostream &out,
            std::ostream &err) {
  RunConfig rc = load_config(c);
  if (samples)
    rc.gdd_samples = *samples;
  const LayeredNetwork net = build_network(rc);
  const Dataset train = rc.gdd_input == "random"
                            ? Dataset{}
                            : load_mnist_dir(resolve_mnist_dir(c.mnist_dir), true);
  const SampleSet s = draw_gdd_samples(rc, train);
  std::vector<double> betas = rc.gdd_betas;
  if (betas.empty())
    betas = {rc.train.hyper.beta};
  std::vector<std::vector<double>> etas = rc.gdd_etas;
  if (etas.empty())
    etas = {rc.train.hyper.lr_per_layer};
  const auto rows =
      gdd_sweep(net, rc.train.algorithm, rc.train.hyper, s.xs, s.ys, betas, etas);
  if (!rows.empty() && rows.front().unsettled > 0)
    err << "warning: " << rows.front().unsettled << " of " << s.xs.size()
        << " free phases did not reach convergence_tol within T steps\n";
  auto file = open_output(c, "gdd.csv");
  write_gdd_csv(file ? *file : out, rows, rc.net.mode, rc.net.layers_label());
  if (file) {
    for (const auto &r : rows) {
      out << to_string(r.algorithm) << " beta=" << r.beta << " eta=" << join_rates(r.eta)
          << " samples=" << r.samples << " total_angle_deg=";
      if (r.report.total_angle_deg)
        out << *r.report.total_angle_deg;
      else
        out << "undef";
      out << " min_cosine=";
      if (const auto mc = r.report.min_cosine())
        out << *mc;
      else
        out << "undef";
      out << "\n";
    }
  }
  return kExitOk;
}

struct Check {
  std::string name;
  double measured;
  double threshold;
  bool pass() const { return measured < threshold; }
};

double max_abs_diff(const NetworkState &a, const NetworkState &b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.layers.size(); ++n)
    for (std::size_t i = 0; i < a.layers[n].size(); ++i)
      m = std::max(m, std::abs(a.layers[n][i] - b.layers[n][i]));
  return m;
}

double rel_error(const Vector &got, const Vector &want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::sqrt(den);
}

LayeredNetwork small_network(const char *layers, ActivationKind act, DynamicsMode mode,
                             std::uint64_t seed) {
  NetSpec spec = NetSpec::from_layers(layers);
  spec.activation = act;
  spec.mode = mode;
  spec.epsilon = mode == DynamicsMode::RealTime ? 0.5 : 1.0;
  LayeredNetwork net = glorot_init(spec, seed);
  for (auto &m : net.params)
    for (double &w : m.flat())
      w *= 0.5;
  return net;
}

std::pair<Vector, Vector> small_sample(const LayeredNetwork &net, std::uint64_t seed) {
  auto rng = make_rng(seed, RngStream::Sample);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(net.input_size), y(net.layer_sizes[0]);
  for (double &v : x)
    v = u(rng);
  for (double &v : y)
    v = u(rng);
  return {x, y};
}

std::vector<Check> oracle_checks(ActivationKind act, DynamicsMode mode, std::uint64_t seed) {
  std::vector<Check> checks;
  {
    const LayeredNetwork net = small_network("10-8-4", act, mode, seed);
    const auto [x, y] = small_sample(net, seed);
    Hyperparams h;
    h.T = 600;
    const Trajectory traj = run_free_phase(net, x, h);
    if (!(traj.final_residual < 1e-12))
      throw Error(ErrorCode::NotConverged, "rbp-check: free phase residual " +
                                               std::to_string(traj.final_residual));
    const int K = 10;
    const GradientSeries bptt = bptt_gradients(net, x, traj, y, K);
    const GradientSeries rbp = rbp_gradients(net, x, traj.steady_state(), y, K, 1e-12);
    double diff = 0.0;
    for (int t = 0; t <= K; ++t)
      diff = std::max(diff, max_abs_diff(bptt.state_grads[t], rbp.state_grads[t]));
    for (int t = 0; t < K; ++t) {
      const Vector a = flatten(bptt.param_grads[t]), b = flatten(rbp.param_grads[t]);
      for (std::size_t i = 0; i < a.size(); ++i)
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    checks.push_back({"bptt_equals_rbp_near_steady_state", diff, 1e-9});

    int K_rbp = 20;
    GradientSeries series = rbp_gradients(net, x, traj.steady_state(), y, K_rbp, 1e-12);
    while (series.tail_norm >= 1e-10 && K_rbp < 5000) {
      K_rbp *= 2;
      series = rbp_gradients(net, x, traj.steady_state(), y, K_rbp, 1e-12);
    }
    const Vector total = flatten(total_param_grad(series));
    const Vector fd = flatten(finite_diff_loss_grad(net, x, y, h.T, 1e-5, 1e-11));
    checks.push_back({"rbp_total_vs_finite_differences", rel_error(total, fd), 1e-4});

    const int T_short = 30;
    Hyperparams hs;
    hs.T = T_short;
    const Trajectory short_traj = run_free_phase(net, x, hs);
    const Vector bptt_total =
        flatten(total_param_grad(bptt_gradients(net, x, short_traj, y, T_short)));
    const Vector fd_unrolled = flatten(finite_diff_unrolled_grad(net, x, y, T_short, 1e-5));
    checks.push_back({"bptt_total_vs_finite_differences", rel_error(bptt_total, fd_unrolled), 1e-5});
  }
  {
    const LayeredNetwork net = small_network("6-4-2", act, mode, seed + 1);
    const auto [x, y] = small_sample(net, seed + 1);
    const Relaxed r = relax(net, x, 600);
    const GradientSeries rbp = rbp_gradients(net, x, r.state, y, 5, 1e-12);
    double worst = 0.0;
    for (int t = 0; t <= 5; ++t) {
      const Vector fd = projected_cost_state_grad(net, x, r.state, y, t).flatten();
      worst = std::max(worst, rel_error(rbp.state_grads[t].flatten(), fd));
    }
    checks.push_back({"rbp_state_grads_vs_projected_cost", worst, 1e-4});
  }
  return checks;
}

int cmd_rbp_check(const Common &c, const std::string &activation, const std::string &mode,
                  std::ostream &out) {
  const auto checks =
      oracle_checks(parse_activation(activation), parse_mode(mode), c.seed_set ? c.seed : 1);
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  for (const auto &ch : checks) {
    out << (ch.pass() ? "PASS " : "FAIL ") << ch.name << " measured=" << ch.measured
        << " threshold=" << ch.threshold << "\n";
    ok = ok && ch.pass();
  }
  return ok ? kExitOk : kExitNumerical;
}

std::pair<Dataset, Dataset> load_slices(const RunConfig &rc, const Common &c) {
  const auto dir = resolve_mnist_dir(c.mnist_dir);
  Dataset train = load_mnist_dir(dir, true).slice(0, rc.train.train_size);
  Dataset test = load_mnist_dir(dir, false).slice(0, rc.train.test_size);
  if (!train.images.empty() && train.images[0].size() != rc.net.input_size)
    throw Error(ErrorCode::InvalidArgument, "MNIST images do not match the network input size");
  return {std::move(train), std::move(test)};
}

int cmd_train(const Common &c, std::optional<int> epochs, std::ostream &out) {
  RunConfig rc = load_config(c);
  if (epochs)
    rc.train.epochs = *epochs;
  const auto [train_set, test_set] = load_slices(rc, c);
  LayeredNetwork net = build_network(rc);
  out << "# " << to_string(rc.train.algorithm) << " " << rc.net.layers_label() << " "
      << to_string(rc.net.activation) << " " << to_string(rc.net.mode) << " train="
      << train_set.size() << " test=" << test_set.size() << "\n";
  if (!net.tied)
    out << "# initial feedback angle " << feedback_angle(net) << " deg\n";
  out << "epoch,train_err,test_err\n" << std::fixed << std::setprecision(2);
  const TrainReport report = train(net, rc.train, train_set, test_set, [&](const EpochStats &e) {
    out << e.epoch << "," << e.train_err << "," << e.test_err << std::endl;
  });
  out << "# wall_seconds=" << report.wall_seconds << "\n";
  if (auto file = open_output(c, "train.csv"))
    write_train_csv(*file, report);
  if (!c.out.empty())
    save_checkpoint(net, std::filesystem::path(c.out) / "checkpoint.json");
  return kExitOk;
}

int cmd_eval(const Common &c, const std::string &checkpoint, std::optional<int> T,
             std::optional<std::size_t> test_size, std::ostream &out) {
  RunConfig rc = load_config(c);
  const LayeredNetwork net = load_checkpoint(checkpoint);
  const int steps = T ? *T : rc.train.hyper.T;
  const std::size_t n = test_size ? *test_size : rc.train.test_size;
  const Dataset test = load_mnist_dir(resolve_mnist_dir(c.mnist_dir), false).slice(0, n);
  out << std::fixed << std::setprecision(2) << "test_err=" << evaluate(net, test, steps)
      << " samples=" << test.size() << " T=" << steps << "\n";
  return kExitOk;
}

int cmd_angle_init(const Common &c, std::size_t size, const std::vector<double> &targets,
                   double tolerance, std::ostream &out) {
  NetSpec spec;
  spec.input_size = size;
  spec.layer_sizes = {size, size};
  spec.tied = false;
  const std::uint64_t seed = c.seed_set ? c.seed : 1;
  const LayeredNetwork base = glorot_init(spec, seed);
  out << "target_deg,flip_prob,measured_deg\n" << std::fixed << std::setprecision(3);
  bool ok = true;
  for (double psi : targets) {
    const auto fb = angle_controlled_init(std::span<const Matrix>(&base.forward(0), 1), psi, seed);
    const double measured = angle_between(base.forward(0).flat(), fb[0].transposed().flat());
    const double p = 0.5 * (1.0 - std::cos(psi * std::acos(-1.0) / 180.0));
    out << psi << "," << p << "," << measured << "\n";
    ok = ok && std::abs(measured - psi) <= tolerance;
  }
  return ok ? kExitOk : kExitNumerical;
}

} // namespace

int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Equilibrium propagation, its continual variants, BPTT and RBP"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App *sub) {
    sub->add_option("--config", c.config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "random seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--mnist-dir", c.mnist_dir, "directory holding the MNIST IDX files");
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  ToyParams toy;
  auto *toy_cmd = app.add_subcommand("toy", "scalar model series (closed forms and recurrences)");
  add_common(toy_cmd);
  toy_cmd->add_option("--theta", toy.theta);
  toy_cmd->add_option("--beta", toy.beta);
  toy_cmd->add_option("--eta", toy.eta);
  toy_cmd->add_option("--T", toy.T);
  toy_cmd->add_option("--K", toy.K);

  std::optional<std::size_t> gdd_n;
  auto *gdd_cmd = app.add_subcommand("gdd", "compare normalised updates with BPTT gradients");
  add_common(gdd_cmd);
  gdd_cmd->add_option("--samples", gdd_n, "samples averaged per row");

  std::string rbp_act = "tanh", rbp_mode = "discrete";
  auto *rbp_cmd = app.add_subcommand("rbp-check", "BPTT/RBP/finite-difference oracle checks");
  add_common(rbp_cmd);
  rbp_cmd->add_option("--activation", rbp_act);
  rbp_cmd->add_option("--mode", rbp_mode);

  std::optional<int> epochs;
  auto *train_cmd = app.add_subcommand("train", "train on MNIST");
  add_common(train_cmd);
  train_cmd->add_option("--epochs", epochs);

  std::string checkpoint;
  std::optional<int> eval_T;
  std::optional<std::size_t> eval_n;
  auto *eval_cmd = app.add_subcommand("eval", "test error of a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--T", eval_T);
  eval_cmd->add_option("--test-size", eval_n);

  std::size_t angle_size = 512;
  std::vector<double> angle_targets{0, 45, 90, 135, 180};
  double angle_tol = 5.0;
  auto *angle_cmd = app.add_subcommand("angle-init-check", "measured angle of the sign-flip init");
  add_common(angle_cmd);
  angle_cmd->add_option("--size", angle_size)->check(CLI::PositiveNumber);
  angle_cmd->add_option("--targets", angle_targets)->delimiter(',');
  angle_cmd->add_option("--tolerance", angle_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_thread_count(c.threads);
    if (*toy_cmd)
      return cmd_toy(c, toy, out, err);
    if (*gdd_cmd)
      return cmd_gdd(c, gdd_n, out, err);
    if (*rbp_cmd)
      return cmd_rbp_check(c, rbp_act, rbp_mode, out);
    if (*train_cmd)
      return cmd_train(c, epochs, out);
    if (*eval_cmd)
      return cmd_eval(c, checkpoint, eval_T, eval_n, out);
    if (*angle_cmd)
      return cmd_angle_init(c, angle_size, angle_targets, angle_tol, out);
  } catch (const Error &e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

} // namespace eqprop
