// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "eqprop/config.hpp"

using namespace eqprop;
namespace fs = std::filesystem;

TEST_CASE("number lists") {
  CHECK(parse_number_list("0.08-0.04") == std::vector<double>{0.08, 0.04});
  CHECK(parse_number_list("0.2-0.05-0.005") == std::vector<double>{0.2, 0.05, 0.005});
  CHECK(parse_number_list("2e-5-2e-5") == std::vector<double>{2e-5, 2e-5});
  CHECK(parse_number_list("0.1, 0.2 0.3") == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(parse_number_list("-1 2") == std::vector<double>{-1, 2});
  CHECK_THROWS_AS(parse_number_list("0.1-abc"), Error);
}

TEST_CASE("key = value files") {
  const auto f = ConfigFile::parse("# comment\n  T = 30  # trailing\n\nbeta=0.5\nlr = 0.1-0.2\n");
  CHECK(f.get_int("T", 0) == 30);
  CHECK(f.get_double("beta", 0) == 0.5);
  CHECK(f.get_doubles("lr", {}) == std::vector<double>{0.1, 0.2});
  CHECK(f.get_int("K", 7) == 7);
  CHECK_THROWS_AS(ConfigFile::parse("T = 1\nT = 2\n"), Error);
  CHECK_THROWS_AS(ConfigFile::parse("just words\n"), Error);
  CHECK_THROWS_AS(ConfigFile::parse("T = 3.5").get_int("T", 0), Error);
  CHECK_THROWS_AS(ConfigFile::parse("x = maybe").get_bool("x", false), Error);
  CHECK(ConfigFile::parse("x = yes").get_bool("x", false));
  const auto lists = ConfigFile::parse("e = 0-0; 2e-5-2e-5").get_double_lists("e", {});
  CHECK(lists.size() == 2);
  CHECK(lists[1] == std::vector<double>{2e-5, 2e-5});
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/x.cfg"), Error);
}

TEST_CASE("apply_config") {
  const RunConfig rc = apply_config(ConfigFile::parse(
      "algorithm = cvf\nlayers = 784-512-512-10\nactivation = sigmoid\nT = 100\nK = 20\n"
      "beta = 0.35\nrandom_beta = true\nepochs = 150\nlr = 0.009-0.0016-0.00016\nangle = 45\n"));
  CHECK(rc.train.algorithm == Algorithm::CVF);
  CHECK_FALSE(rc.net.tied);
  CHECK(rc.net.layer_sizes == std::vector<std::size_t>{10, 512, 512});
  CHECK(rc.train.hyper.lr_per_layer.front() == 0.009);
  CHECK(rc.train.hyper.random_beta);
  CHECK(rc.train.init_angle_deg == 45.0);

  const RunConfig rt = apply_config(ConfigFile::parse("mode = realtime\nepsilon = 0.2\n"));
  CHECK(rt.net.mode == DynamicsMode::RealTime);
  CHECK(rt.net.epsilon == 0.2);

  CHECK_THROWS_AS(apply_config(ConfigFile::parse("colour = red\n")), Error);
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("lr = 0.1-0.1-0.1\n")), Error);
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("beta = 0\n")), Error);
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("batch_size = 0\n")), Error);
  CHECK_THROWS_AS(apply_config(ConfigFile::parse("gdd_input = webcam\n")), Error);

  const RunConfig d = default_run_config();
  CHECK(d.train.hyper.T == 30);
  CHECK(d.train.hyper.lr_per_layer == std::vector<double>{0.08, 0.04});
  CHECK(d.net.activation == ActivationKind::ShiftedSigmoid);
}

TEST_CASE("every shipped config loads") {
  int n = 0;
  for (const auto &entry : fs::directory_iterator(fs::path(EQPROP_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".cfg")
      continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(apply_config(ConfigFile::load(entry.path())));
    ++n;
  }
  CHECK(n >= 12);
}
