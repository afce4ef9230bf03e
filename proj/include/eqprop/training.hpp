// SPDX-License-Identifier: Apache-2.0
/**
 * @file training.hpp
 * @brief Mini-batch SGD with EP, C-EP and C-VF; Glorot and angle-controlled
 *        initialisation; the rescaled C-EP debugging step; evaluation.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eqprop/data.hpp"
#include "eqprop/model.hpp"
#include "eqprop/phases.hpp"

namespace eqprop {

/// Topology and dynamics of a network before its weights exist.
struct NetSpec {
  std::vector<std::size_t> layer_sizes{10, 64}; // output first
  std::size_t input_size = 784;
  bool tied = true;
  ActivationKind activation = ActivationKind::Tanh;
  DynamicsMode mode = DynamicsMode::DiscreteTime;
  double epsilon = 1.0;

  /// Parses the input-first "784-64-10" notation.
  static NetSpec from_layers(std::string_view layers);
  /// Input-first label, the inverse of from_layers.
  std::string layers_label() const;
};

/// Every block uniform in +-sqrt(6 / (fan_in + fan_out)), deterministic per
/// seed.
LayeredNetwork glorot_init(const NetSpec &spec, std::uint64_t seed);

/// theta_b = M(p) * theta_f^T per block, each mask entry -1 with probability
/// p = (1 - cos psi) / 2 and +1 otherwise.
std::vector<Matrix> angle_controlled_init(std::span<const Matrix> theta_f, double psi_deg,
                                          std::uint64_t seed);

/// Replaces the feedback blocks of an untied network by
/// angle_controlled_init of its forward blocks.
void set_feedback_angle(LayeredNetwork &net, double psi_deg, std::uint64_t seed);

/// Angle in degrees between the flattened forward blocks and the flattened
/// transposed feedback blocks of an untied network.
double feedback_angle(const LayeredNetwork &net);

/// beta with a random sign when hyper.random_beta is set.
double draw_beta(const Hyperparams &hyper, std::mt19937_64 &rng);

struct MinibatchResult {
  std::size_t samples = 0;
  std::size_t skipped = 0;
  std::size_t correct = 0; // argmax of the free steady state before the update
};

/// One mini-batch step. EP applies (eta / beta) times the batch mean of
/// dPhi/dtheta(s_K^beta) - dPhi/dtheta(s_*) once; C-EP and C-VF run the
/// batched continual second phase. Diverging samples are skipped; more than
/// 10% skipped throws Divergence.
MinibatchResult train_minibatch(LayeredNetwork &net, Algorithm algo, const Batch &batch,
                                const Hyperparams &hyper, double beta);

/// C-EP step with rates scaled by hyper.lr_tiny_scale whose accumulated
/// change is then rescaled by 1 / lr_tiny_scale.
MinibatchResult debug_rescaled_cep(LayeredNetwork &net, const Batch &batch,
                                   const Hyperparams &hyper, double beta);

/// The EP global update for a batch without applying it.
ParamSet ep_batch_update(const LayeredNetwork &net, const Batch &batch, const Hyperparams &hyper,
                         double beta);

int predict(const LayeredNetwork &net, std::span<const double> x, int T);

/// Percentage of samples whose argmax of s^0 after T free steps differs from
/// the label. Diverging samples count as errors.
double evaluate(const LayeredNetwork &net, const Dataset &data, int T);

struct TrainConfig {
  Algorithm algorithm = Algorithm::EP;
  Hyperparams hyper;
  int epochs = 1;
  std::size_t batch_size = 20;
  std::uint64_t seed = 1;
  double init_angle_deg = 0.0;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  /// Run C-EP through debug_rescaled_cep.
  bool rescaled_cep = false;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_err = 0.0; // on the fly, before each mini-batch update
  double test_err = 0.0;
  std::size_t skipped = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double wall_seconds = 0.0;
};

/// Builds nothing: trains `net` in place. `on_epoch` (optional) sees each
/// epoch's stats as soon as they are available.
TrainReport train(LayeredNetwork &net, const TrainConfig &cfg, const Dataset &train_set,
                  const Dataset &test_set,
                  const std::function<void(const EpochStats &)> &on_epoch = {});

/// `epoch,train_err,test_err` rows followed by a summary comment line.
void write_train_csv(std::ostream &out, const TrainReport &report);

} // namespace eqprop
