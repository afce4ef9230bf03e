// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "eqprop/model.hpp"
#include "support.hpp"

using namespace eqprop;
using testing::random_net;

TEST_CASE("primitive_phi by hand") {
  LayeredNetwork net = LayeredNetwork::zeros({1, 1}, 1, true, ActivationKind::Tanh,
                                             DynamicsMode::DiscreteTime);
  net.forward(0)(0, 0) = 3.0;
  net.input_weights()(0, 0) = 1.0;
  NetworkState s{{Vector{1.0}, Vector{2.0}}};
  CHECK(primitive_phi(net, Vector{1.0}, s) == 8.0);
  CHECK(primitive_phi(net, Vector{1.0}, NetworkState::zeros(net)) == 0.0);
}

TEST_CASE("primitive_phi equals the condensed quadratic form") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = random_net({3, 5, 4}, 6, true, ActivationKind::Tanh,
                                DynamicsMode::DiscreteTime, 1.0, seed);
    const Vector x = testing::random_vector(6, seed + 50);
    NetworkState s = NetworkState::zeros(net);
    for (std::size_t n = 0; n < s.layers.size(); ++n)
      s.layers[n] = testing::random_vector(s.layers[n].size(), seed * 10 + n, -1, 1);
    const CondensedForm f = condensed_form(net);
    CHECK(primitive_phi(net, x, s) ==
          doctest::Approx(condensed_phi(f, s.flatten(), x)).epsilon(1e-13));
  }
}

TEST_CASE("transition pre-activation is the state gradient of the condensed form") {
  const auto net = random_net({4, 6, 5}, 7, true, ActivationKind::Tanh,
                              DynamicsMode::DiscreteTime, 0.8, 3);
  const Vector x = testing::random_vector(7, 4);
  NetworkState s = NetworkState::zeros(net);
  for (std::size_t n = 0; n < s.layers.size(); ++n)
    s.layers[n] = testing::random_vector(s.layers[n].size(), 20 + n, -1, 1);
  const auto a = couplings(net, input_drive(net, x), s);
  Vector a_flat;
  for (const auto &v : a)
    a_flat.insert(a_flat.end(), v.begin(), v.end());

  // grad of 1/2 s^T W s + s^T Wx x with W symmetric is W s + Wx x
  const CondensedForm f = condensed_form(net);
  const Vector sf = s.flatten();
  Vector grad(sf.size(), 0.0);
  gemv(f.w, sf, grad);
  gemv_acc(f.wx, x, grad);
  CHECK(testing::max_abs_diff(a_flat, grad) < 1e-12);

  const NetworkState next = transition_step(net, x, s);
  const Vector nf = next.flatten();
  for (std::size_t i = 0; i < nf.size(); ++i)
    CHECK(nf[i] == doctest::Approx(std::tanh(grad[i])).epsilon(1e-13));
}

TEST_CASE("transition_step reference cases") {
  SUBCASE("zero weights and input stay at zero") {
    const auto net = LayeredNetwork::zeros({3, 4}, 5, true, ActivationKind::Tanh,
                                           DynamicsMode::DiscreteTime);
    const NetworkState s = transition_step(net, Vector(5, 0.0), NetworkState::zeros(net));
    CHECK(s == NetworkState::zeros(net));
  }
  SUBCASE("two hidden units by hand") {
    // output 1 unit, hidden 2 units, input 2
    LayeredNetwork net = LayeredNetwork::zeros({1, 2}, 2, true, ActivationKind::Tanh,
                                               DynamicsMode::DiscreteTime);
    net.forward(0) = Matrix(1, 2, {0.5, -0.25});
    net.input_weights() = Matrix(2, 2, {1.0, 2.0, -1.0, 0.5});
    const Vector x{0.2, 0.4};
    NetworkState s{{Vector{0.3}, Vector{0.1, -0.2}}};
    const NetworkState next = transition_step(net, x, s);
    CHECK(next.layers[0][0] == doctest::Approx(std::tanh(0.5 * 0.1 - 0.25 * -0.2)));
    CHECK(next.layers[1][0] == doctest::Approx(std::tanh(0.2 + 0.8 + 0.5 * 0.3)));
    CHECK(next.layers[1][1] == doctest::Approx(std::tanh(-0.2 + 0.2 - 0.25 * 0.3)));
  }
  SUBCASE("a fixed point is returned unchanged") {
    const auto net = random_net({3, 4}, 5, true, ActivationKind::Tanh,
                                DynamicsMode::DiscreteTime, 0.3, 9);
    const Vector x = testing::random_vector(5, 1);
    NetworkState s = NetworkState::zeros(net);
    for (int t = 0; t < 400; ++t)
      s = transition_step(net, x, s);
    CHECK(testing::max_abs_diff(transition_step(net, x, s), s) < 1e-15);
  }
}

TEST_CASE("untie mirrors the forward blocks") {
  const auto net = random_net({2, 3, 4}, 5, true, ActivationKind::Tanh,
                              DynamicsMode::DiscreteTime, 1.0, 2);
  const LayeredNetwork u = untie(net);
  CHECK_FALSE(u.tied);
  CHECK(u.block_count() == 5);
  CHECK(u.backward(0) == net.forward(0).transposed());
  CHECK(u.backward(1) == net.forward(1).transposed());
  const Vector x = testing::random_vector(5, 3);
  NetworkState s = NetworkState::zeros(net);
  for (int t = 0; t < 5; ++t) {
    const NetworkState a = transition_step(net, x, s), b = transition_step(u, x, s);
    CHECK(testing::max_abs_diff(a, b) < 1e-15);
    s = a;
  }
  CHECK(u.block_name(3) == "W1_0");
  CHECK(u.block_name(4) == "W2_1");
  CHECK(net.block_name(0) == "W0_1");
  CHECK(net.block_name(2) == "W2_x");
}

TEST_CASE("validate catches shape errors") {
  auto net = random_net({2, 3}, 4, true, ActivationKind::Tanh, DynamicsMode::DiscreteTime, 1.0, 1);
  CHECK_NOTHROW(net.validate());
  net.forward(0) = Matrix(3, 2);
  CHECK_THROWS_AS(net.validate(), Error);
}

TEST_CASE("checkpoint round-trip is exact") {
  const auto net = random_net({10, 7}, 12, false, ActivationKind::ShiftedSigmoid,
                              DynamicsMode::RealTime, 0.5, 77, 0.25);
  const auto path = std::filesystem::temp_directory_path() / "eqprop_test_checkpoint.json";
  save_checkpoint(net, path);
  const LayeredNetwork back = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(back.layer_sizes == net.layer_sizes);
  CHECK(back.input_size == net.input_size);
  CHECK(back.tied == net.tied);
  CHECK(back.activation == net.activation);
  CHECK(back.mode == net.mode);
  CHECK(back.epsilon == net.epsilon);
  CHECK(back.params == net.params);
}

TEST_CASE("load_checkpoint reports a missing file") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/ckpt.json"), Error);
}
