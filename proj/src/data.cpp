// SPDX-License-Identifier: Apache-2.0

#include "eqprop/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <zlib.h>

#include "eqprop/rng.hpp"

namespace eqprop {

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  Dataset out;
  out.rows = rows;
  out.cols = cols;
  const std::size_t b = std::min(begin, size());
  const std::size_t e = std::min(size(), b + count);
  out.images.assign(images.begin() + static_cast<std::ptrdiff_t>(b),
                    images.begin() + static_cast<std::ptrdiff_t>(e));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(b),
                    labels.begin() + static_cast<std::ptrdiff_t>(e));
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path &path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f)
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0)
    bytes.insert(bytes.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed)
    throw Error(ErrorCode::IoError, "read error in " + path.string());
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char> &b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream &out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void need(const std::vector<unsigned char> &b, std::size_t bytes, const std::filesystem::path &p) {
  if (b.size() < bytes)
    throw Error(ErrorCode::Truncated, p.string() + ": expected " + std::to_string(bytes) +
                                          " bytes, found " + std::to_string(b.size()));
}

} // namespace

Dataset load_mnist_idx(const std::filesystem::path &images, const std::filesystem::path &labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  need(img, 4, images);
  need(lab, 4, labels);
  if (be32(img, 0) != kIdxImageMagic)
    throw Error(ErrorCode::WrongMagic, images.string() + ": not an IDX image file");
  if (be32(lab, 0) != kIdxLabelMagic)
    throw Error(ErrorCode::WrongMagic, labels.string() + ": not an IDX label file");
  need(img, 16, images);
  need(lab, 8, labels);
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  if (n != n_labels)
    throw Error(ErrorCode::CountMismatch, std::to_string(n) + " images but " +
                                              std::to_string(n_labels) + " labels");
  need(img, 16 + n * rows * cols, images);
  need(lab, 8 + n, labels);
  Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.images.reserve(n);
  d.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(rows * cols);
    const unsigned char *px = img.data() + 16 + i * rows * cols;
    for (std::size_t k = 0; k < v.size(); ++k)
      v[k] = px[k] / 255.0;
    d.images.push_back(std::move(v));
    d.labels.push_back(lab[8 + i]);
  }
  return d;
}

void write_idx(const Dataset &data, const std::filesystem::path &images,
               const std::filesystem::path &labels) {
  if (data.images.size() != data.labels.size())
    throw Error(ErrorCode::CountMismatch, "write_idx: images and labels differ in count");
  std::ofstream img(images, std::ios::binary), lab(labels, std::ios::binary);
  if (!img || !lab)
    throw Error(ErrorCode::IoError, "write_idx: cannot create output files");
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(data.rows));
  put_be32(img, static_cast<std::uint32_t>(data.cols));
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.images[i].size() != data.rows * data.cols)
      throw Error(ErrorCode::DimensionMismatch, "write_idx: image has wrong pixel count");
    for (double v : data.images[i])
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    lab.put(static_cast<char>(data.labels[i]));
  }
  if (!img || !lab)
    throw Error(ErrorCode::IoError, "write_idx: write failed");
}

Dataset load_mnist_dir(const std::filesystem::path &dir, bool train) {
  const std::string prefix = train ? "train" : "t10k";
  auto pick = [&](const std::string &stem) {
    for (const char *suffix : {".gz", ""}) {
      const auto p = dir / (stem + suffix);
      if (std::filesystem::exists(p))
        return p;
    }
    throw Error(ErrorCode::IoError, "no " + stem + "[.gz] in " + dir.string());
  };
  return load_mnist_idx(pick(prefix + "-images-idx3-ubyte"), pick(prefix + "-labels-idx1-ubyte"));
}

Vector one_hot(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes)
    throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " out of range");
  Vector v(classes, 0.0);
  v[static_cast<std::size_t>(label)] = 1.0;
  return v;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed, RngStream::Shuffle, epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0)
    throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  const auto order = epoch_order(n, seed, epoch);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batch_size)));
  return out;
}

Batch make_batch(const Dataset &data, std::span<const std::size_t> indices, std::size_t classes) {
  Batch b;
  for (std::size_t i : indices) {
    if (i >= data.size())
      throw Error(ErrorCode::InvalidArgument, "batch index out of range");
    b.inputs.push_back(data.images[i]);
    b.targets.push_back(one_hot(data.labels[i], classes));
    b.labels.push_back(data.labels[i]);
  }
  return b;
}

} // namespace eqprop
