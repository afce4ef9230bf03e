// SPDX-License-Identifier: Apache-2.0

#include "eqprop/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "eqprop/rng.hpp"

namespace eqprop {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_double(const std::string &tok, const std::string &what) {
  double v = 0.0;
  const auto *end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::ParseError, what + ": '" + tok + "' is not a number");
  return v;
}

} // namespace

std::vector<double> parse_number_list(const std::string &text) {
  std::vector<double> out;
  std::string tok;
  auto flush = [&] {
    if (!tok.empty())
      out.push_back(to_double(tok, "number list"));
    tok.clear();
  };
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '-' && !tok.empty() && tok.back() != 'e' && tok.back() != 'E') {
      flush();
    } else {
      tok.push_back(c);
    }
  }
  flush();
  return out;
}

ConfigFile ConfigFile::parse(const std::string &text, const std::string &origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string ConfigFile::get(const std::string &key, const std::string &fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long ConfigFile::get_int(const std::string &key, long fallback) const {
  if (!has(key))
    return fallback;
  const std::string v = get(key, "");
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::ParseError, origin_ + ": " + key + " = '" + v + "' is not an integer");
  return out;
}

double ConfigFile::get_double(const std::string &key, double fallback) const {
  return has(key) ? to_double(get(key, ""), origin_ + ": " + key) : fallback;
}

bool ConfigFile::get_bool(const std::string &key, bool fallback) const {
  if (!has(key))
    return fallback;
  const std::string v = lower(get(key, ""));
  if (v == "true" || v == "yes" || v == "1" || v == "on")
    return true;
  if (v == "false" || v == "no" || v == "0" || v == "off")
    return false;
  throw Error(ErrorCode::ParseError, origin_ + ": " + key + " = '" + v + "' is not a boolean");
}

std::vector<double> ConfigFile::get_doubles(const std::string &key,
                                            std::vector<double> fallback) const {
  return has(key) ? parse_number_list(get(key, "")) : fallback;
}

std::vector<std::vector<double>>
ConfigFile::get_double_lists(const std::string &key,
                             std::vector<std::vector<double>> fallback) const {
  if (!has(key))
    return fallback;
  std::vector<std::vector<double>> out;
  std::istringstream in(get(key, ""));
  std::string group;
  while (std::getline(in, group, ';'))
    if (!trim(group).empty())
      out.push_back(parse_number_list(group));
  return out;
}

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto &kv : values_)
    out.push_back(kv.first);
  return out;
}

RunConfig default_run_config() {
  RunConfig rc;
  rc.net = NetSpec::from_layers("784-64-10");
  rc.net.activation = ActivationKind::ShiftedSigmoid;
  rc.train.algorithm = Algorithm::EP;
  rc.train.hyper.T = 30;
  rc.train.hyper.K = 10;
  rc.train.hyper.beta = 0.1;
  rc.train.hyper.lr_per_layer = {0.08, 0.04};
  rc.train.epochs = 20;
  return rc;
}

RunConfig apply_config(const ConfigFile &f, RunConfig rc) {
  static const std::vector<std::string> known = {
      "algorithm", "layers",        "activation",  "mode",       "epsilon",     "T",
      "K",         "beta",          "random_beta", "epochs",     "lr",          "angle",
      "batch_size", "seed",         "train_size",  "test_size",  "rescaled_cep", "lr_tiny_scale",
      "convergence_tol", "gdd_betas", "gdd_etas",  "gdd_samples", "gdd_input"};
  for (const auto &k : f.keys())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw Error(ErrorCode::ParseError, "unknown config key '" + k + "'");

  if (f.has("algorithm"))
    rc.train.algorithm = parse_algorithm(lower(f.get("algorithm", "")));
  if (f.has("layers")) {
    const NetSpec parsed = NetSpec::from_layers(f.get("layers", ""));
    rc.net.layer_sizes = parsed.layer_sizes;
    rc.net.input_size = parsed.input_size;
  }
  if (f.has("activation"))
    rc.net.activation = parse_activation(lower(f.get("activation", "")));
  if (f.has("mode"))
    rc.net.mode = parse_mode(lower(f.get("mode", "")));
  rc.net.tied = rc.train.algorithm != Algorithm::CVF;

  Hyperparams &h = rc.train.hyper;
  h.epsilon = f.get_double("epsilon", h.epsilon);
  rc.net.epsilon = rc.net.mode == DynamicsMode::RealTime ? h.epsilon : 1.0;
  h.T = static_cast<int>(f.get_int("T", h.T));
  h.K = static_cast<int>(f.get_int("K", h.K));
  h.beta = f.get_double("beta", h.beta);
  h.random_beta = f.get_bool("random_beta", h.random_beta);
  h.lr_per_layer = f.get_doubles("lr", h.lr_per_layer);
  h.lr_tiny_scale = f.get_double("lr_tiny_scale", h.lr_tiny_scale);
  h.convergence_tol = f.get_double("convergence_tol", h.convergence_tol);

  rc.train.epochs = static_cast<int>(f.get_int("epochs", rc.train.epochs));
  rc.train.init_angle_deg = f.get_double("angle", rc.train.init_angle_deg);
  const long bs = f.get_int("batch_size", static_cast<long>(rc.train.batch_size));
  const long seed = f.get_int("seed", static_cast<long>(rc.train.seed));
  const long ntr = f.get_int("train_size", static_cast<long>(rc.train.train_size));
  const long nte = f.get_int("test_size", static_cast<long>(rc.train.test_size));
  const long ns = f.get_int("gdd_samples", static_cast<long>(rc.gdd_samples));
  if (bs < 1 || seed < 0 || ntr < 0 || nte < 0 || ns < 1)
    throw Error(ErrorCode::InvalidArgument, "batch_size, seed, sizes and gdd_samples must be "
                                            "non-negative (batch_size and gdd_samples >= 1)");
  rc.train.batch_size = static_cast<std::size_t>(bs);
  rc.train.seed = static_cast<std::uint64_t>(seed);
  rc.train.train_size = static_cast<std::size_t>(ntr);
  rc.train.test_size = static_cast<std::size_t>(nte);
  rc.train.rescaled_cep = f.get_bool("rescaled_cep", rc.train.rescaled_cep);
  rc.gdd_samples = static_cast<std::size_t>(ns);
  rc.gdd_betas = f.get_doubles("gdd_betas", rc.gdd_betas);
  rc.gdd_etas = f.get_double_lists("gdd_etas", rc.gdd_etas);
  rc.gdd_input = lower(f.get("gdd_input", rc.gdd_input));
  if (rc.gdd_input != "mnist" && rc.gdd_input != "random")
    throw Error(ErrorCode::InvalidArgument, "gdd_input must be 'mnist' or 'random'");

  if (h.lr_per_layer.size() > rc.net.layer_sizes.size())
    throw Error(ErrorCode::InvalidArgument, "more learning rates than layers");
  h.validate(rc.net.mode);
  rc.train.validate();
  return rc;
}

LayeredNetwork build_network(const RunConfig &rc) {
  LayeredNetwork net = glorot_init(rc.net, rc.train.seed);
  if (!net.tied)
    set_feedback_angle(net, rc.train.init_angle_deg, rc.train.seed);
  return net;
}

SampleSet draw_gdd_samples(const RunConfig &rc, const Dataset &train) {
  SampleSet s;
  const std::size_t classes = rc.net.layer_sizes[0];
  auto rng = make_rng(rc.train.seed, RngStream::Sample);
  if (rc.gdd_input == "random") {
    std::uniform_real_distribution<double> px(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
    for (std::size_t i = 0; i < rc.gdd_samples; ++i) {
      Vector x(rc.net.input_size);
      for (double &v : x)
        v = px(rng);
      s.xs.push_back(std::move(x));
      s.ys.push_back(one_hot(lab(rng), classes));
    }
    return s;
  }
  if (train.images.empty() || train.images[0].size() != rc.net.input_size)
    throw Error(ErrorCode::InvalidArgument, "MNIST images do not match the network input size");
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  for (std::size_t i = 0; i < rc.gdd_samples; ++i) {
    const std::size_t k = pick(rng);
    s.xs.push_back(train.images[k]);
    s.ys.push_back(one_hot(train.labels[k], classes));
  }
  return s;
}

} // namespace eqprop
