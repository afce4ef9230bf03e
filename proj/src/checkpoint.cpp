// SPDX-License-Identifier: Apache-2.0
// Checkpoints are JSON documents: a format tag and version, the topology and
// dynamics flags, and every parameter block as a row-major array. Doubles are
// written with round-trip precision.

#include <fstream>

#include <json.hpp>

#include "eqprop/model.hpp"

namespace eqprop {

namespace {

constexpr const char *kFormat = "eqprop-checkpoint";
constexpr int kVersion = 1;

} // namespace

void save_checkpoint(const LayeredNetwork &net, const std::filesystem::path &path) {
  net.validate();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["layer_sizes"] = net.layer_sizes;
  j["input_size"] = net.input_size;
  j["tied"] = net.tied;
  j["activation"] = std::string(to_string(net.activation));
  j["mode"] = std::string(to_string(net.mode));
  j["epsilon"] = net.epsilon;
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    const Matrix &m = net.params[b];
    blocks.push_back({{"name", net.block_name(b)},
                      {"rows", m.rows()},
                      {"cols", m.cols()},
                      {"data", std::vector<double>(m.flat().begin(), m.flat().end())}});
  }
  j["blocks"] = std::move(blocks);
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  if (!out)
    throw Error(ErrorCode::IoError, "failed writing checkpoint " + path.string());
}

LayeredNetwork load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != kFormat)
      throw Error(ErrorCode::ParseError, path.string() + " is not a checkpoint");
    if (j.at("version").get<int>() != kVersion)
      throw Error(ErrorCode::ParseError, "unsupported checkpoint version in " + path.string());
    LayeredNetwork net = LayeredNetwork::zeros(
        j.at("layer_sizes").get<std::vector<std::size_t>>(), j.at("input_size").get<std::size_t>(),
        j.at("tied").get<bool>(), parse_activation(j.at("activation").get<std::string>()),
        parse_mode(j.at("mode").get<std::string>()), j.at("epsilon").get<double>());
    const auto &blocks = j.at("blocks");
    if (blocks.size() != net.block_count())
      throw Error(ErrorCode::ParseError, "checkpoint block count does not match topology");
    for (std::size_t b = 0; b < net.block_count(); ++b) {
      const auto &jb = blocks[b];
      net.params[b] = Matrix(jb.at("rows").get<std::size_t>(), jb.at("cols").get<std::size_t>(),
                             jb.at("data").get<std::vector<double>>());
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::ParseError, "malformed checkpoint " + path.string() + ": " + e.what());
  }
}

} // namespace eqprop
