// SPDX-License-Identifier: Apache-2.0
/**
 * @file config.hpp
 * @brief Plain-text experiment configuration.
 *
 * One `key = value` per line, '#' starts a comment. Lists accept commas,
 * spaces or dashes between numbers ("0.08-0.04" as in the hyperparameter
 * tables); several rate lists are separated by ';'. Unknown keys are
 * rejected.
 *
 *   algorithm = ep            # ep | cep | cvf
 *   layers = 784-64-10        # input first
 *   activation = sigmoid      # tanh | sigmoid | identity
 *   mode = discrete           # discrete | realtime
 *   epsilon = 0.08
 *   T = 30
 *   K = 10
 *   beta = 0.1
 *   random_beta = false
 *   epochs = 30
 *   lr = 0.08-0.04            # output layer first
 *   angle = 0                 # initial forward/feedback angle (cvf)
 */
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "eqprop/training.hpp"

namespace eqprop {

class ConfigFile {
public:
  static ConfigFile parse(const std::string &text, const std::string &origin = "<string>");
  /// Throws IoError when the file cannot be read.
  static ConfigFile load(const std::filesystem::path &path);

  bool has(const std::string &key) const { return values_.count(key) != 0; }
  std::string get(const std::string &key, const std::string &fallback) const;
  long get_int(const std::string &key, long fallback) const;
  double get_double(const std::string &key, double fallback) const;
  bool get_bool(const std::string &key, bool fallback) const;
  std::vector<double> get_doubles(const std::string &key, std::vector<double> fallback) const;
  /// ';'-separated groups of number lists.
  std::vector<std::vector<double>> get_double_lists(const std::string &key,
                                                    std::vector<std::vector<double>> fallback) const;
  std::vector<std::string> keys() const;

private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

/// Parses "0.08-0.04", "0.08, 0.04" or "0.08 0.04"; a leading '-' or an
/// exponent sign stays part of its number.
std::vector<double> parse_number_list(const std::string &text);

/// Everything an experiment command needs.
struct RunConfig {
  NetSpec net;
  TrainConfig train;
  /// gdd sweep axes; empty means {train.hyper.beta} / {train.hyper.lr_per_layer}.
  std::vector<double> gdd_betas;
  std::vector<std::vector<double>> gdd_etas;
  std::size_t gdd_samples = 20;
  /// "mnist" or "random" (uniform [0,1] inputs with random labels).
  std::string gdd_input = "mnist";
};

/// Defaults: the EP-1h row at desk scale (784-64-10, sigmoid, DiscreteTime).
RunConfig default_run_config();

/// Applies every key of `file` on top of `base`. Throws ParseError on an
/// unknown key or a malformed value, InvalidArgument on an invalid value.
RunConfig apply_config(const ConfigFile &file, RunConfig base = default_run_config());

/// Glorot init from the seed; untied nets also get the configured feedback angle.
LayeredNetwork build_network(const RunConfig &rc);

struct SampleSet {
  std::vector<Vector> xs, ys;
};

/// The gdd samples: `gdd_samples` draws from `train` (or uniform random
/// inputs with random labels when gdd_input is "random", `train` unused).
SampleSet draw_gdd_samples(const RunConfig &rc, const Dataset &train);

} // namespace eqprop
