// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eqprop/cli.hpp"

using namespace eqprop;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "eqprop");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_temp(const std::string &name, const std::string &text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::string strip_comments(const std::string &s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0)
      out += line + "\n";
  return out;
}

} // namespace

TEST_CASE("toy command") {
  const Run r = run({"toy", "--theta", "1", "--beta", "0.1", "--eta", "0.01", "--K", "20"});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string comment, header, row, cell;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  CHECK(comment.rfind("#", 0) == 0);
  std::vector<std::string> names, cells;
  for (std::istringstream h(header); std::getline(h, cell, ',');)
    names.push_back(cell);
  for (std::istringstream c(row); std::getline(c, cell, ',');)
    cells.push_back(cell);
  const auto col = std::find(names.begin(), names.end(), "d_theta_cep") - names.begin();
  REQUIRE(col < static_cast<long>(cells.size()));
  CHECK(cells[0] == "0");
  CHECK(std::stod(cells[static_cast<std::size_t>(col)]) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(run({"toy", "--theta", "1", "--beta", "0.1", "--eta", "0.01", "--K", "20"}).out == r.out);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({"train", "--config", "nonexistent.cfg"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"toy", "--beta", "0"}).code == kExitUsage);
  CHECK(run({"eval"}).code == kExitUsage);
  const auto bad = write_temp("eqprop_bad.cfg", "colour = red\n");
  CHECK(run({"gdd", "--config", bad.string()}).code == kExitUsage);
  CHECK(run({"toy", "--help"}).code == kExitOk);
}

TEST_CASE("numerical failures exit 2") {
  const auto cfg = write_temp("eqprop_diverge.cfg",
                              "algorithm = ep\nlayers = 784-64-10\nactivation = identity\n"
                              "T = 150\nK = 10\nbeta = 0.01\ngdd_input = random\ngdd_samples = 2\n");
  const Run r = run({"gdd", "--config", cfg.string()});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("gdd output is reproducible") {
  const auto cfg = write_temp("eqprop_small_gdd.cfg",
                              "algorithm = cep\nlayers = 30-12-5\nactivation = tanh\nT = 200\n"
                              "K = 8\nbeta = 0.01\nlr = 0-0\ngdd_etas = 0-0; 1e-3-1e-3\n"
                              "gdd_input = random\ngdd_samples = 3\n");
  const Run a = run({"gdd", "--config", cfg.string(), "--seed", "4"});
  const Run b = run({"gdd", "--config", cfg.string(), "--seed", "4"});
  REQUIRE(a.code == kExitOk);
  CHECK(strip_comments(a.out) == strip_comments(b.out));
  CHECK(a.out.find("CEP,discrete,30-12-5,0.01,0-0,") != std::string::npos);
}

TEST_CASE("rbp-check passes its oracles") {
  const Run r = run({"rbp-check"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("angle-init-check") {
  const Run r = run({"angle-init-check", "--size", "256", "--targets", "0,90,180", "--tolerance", "6"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("180.000,1.000,180.000") != std::string::npos);
}

TEST_CASE("train and eval round trip") {
  const fs::path out = fs::temp_directory_path() / "eqprop_cli_train";
  fs::remove_all(out);
  const auto cfg = write_temp("eqprop_tiny_train.cfg",
                              "algorithm = ep\nlayers = 784-16-10\nT = 20\nK = 5\nbeta = 0.1\n"
                              "lr = 0.08-0.04\nepochs = 1\ntrain_size = 100\ntest_size = 50\n");
  const Run t = run({"train", "--config", cfg.string(), "--out", out.string()});
  REQUIRE(t.code == kExitOk);
  CHECK(fs::exists(out / "train.csv"));
  REQUIRE(fs::exists(out / "checkpoint.json"));
  const Run e = run({"eval", "--config", cfg.string(), "--checkpoint", (out / "checkpoint.json").string()});
  CHECK(e.code == kExitOk);
  CHECK(e.out.find("samples=50") != std::string::npos);
  fs::remove_all(out);
}
