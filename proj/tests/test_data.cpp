// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "eqprop/data.hpp"
#include "support.hpp"

using namespace eqprop;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_be32(std::ofstream &out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

void write_raw_images(const fs::path &p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<unsigned char> &pixels) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_raw_labels(const fs::path &p, std::uint32_t n, const std::vector<unsigned char> &labels) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, kIdxLabelMagic);
  put_be32(out, n);
  out.write(reinterpret_cast<const char *>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

ErrorCode code_of(const fs::path &img, const fs::path &lab) {
  try {
    load_mnist_idx(img, lab);
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("one white image") {
  TempDir dir("eqprop_idx_white");
  write_raw_images(dir.path / "img", kIdxImageMagic, 1, 2, 3, std::vector<unsigned char>(6, 255));
  write_raw_labels(dir.path / "lab", 1, {7});
  const Dataset d = load_mnist_idx(dir.path / "img", dir.path / "lab");
  REQUIRE(d.size() == 1);
  CHECK(d.rows == 2);
  CHECK(d.cols == 3);
  CHECK(d.images[0] == Vector(6, 1.0));
  CHECK(d.labels[0] == 7);
}

TEST_CASE("IDX errors") {
  TempDir dir("eqprop_idx_errors");
  const auto img = dir.path / "img", lab = dir.path / "lab";
  write_raw_images(img, kIdxImageMagic, 2, 2, 2, std::vector<unsigned char>(8, 10));
  write_raw_labels(lab, 2, {1, 2});
  CHECK_NOTHROW(load_mnist_idx(img, lab));
  CHECK(code_of(lab, lab) == ErrorCode::WrongMagic);
  CHECK(code_of(img, img) == ErrorCode::WrongMagic);
  CHECK(code_of(dir.path / "missing", lab) == ErrorCode::IoError);

  write_raw_images(dir.path / "short", kIdxImageMagic, 2, 2, 2, std::vector<unsigned char>(5, 10));
  CHECK(code_of(dir.path / "short", lab) == ErrorCode::Truncated);

  write_raw_labels(dir.path / "three", 3, {1, 2, 3});
  CHECK(code_of(img, dir.path / "three") == ErrorCode::CountMismatch);
}

TEST_CASE("IDX round trip keeps the pixel bytes") {
  TempDir dir("eqprop_idx_roundtrip");
  Dataset d;
  d.rows = 3;
  d.cols = 4;
  for (int k = 0; k < 9; ++k) {
    Vector v(12);
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<double>((k * 31 + i * 17) % 256) / 255.0;
    d.images.push_back(v);
    d.labels.push_back(k % 10);
  }
  write_idx(d, dir.path / "i", dir.path / "l");
  const Dataset back = load_mnist_idx(dir.path / "i", dir.path / "l");
  CHECK(back.images == d.images);
  CHECK(back.labels == d.labels);
  CHECK(back.rows == 3);
  write_idx(back, dir.path / "i2", dir.path / "l2");
  std::ifstream a(dir.path / "i", std::ios::binary), b(dir.path / "i2", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("shipped MNIST subset") {
  const fs::path dir = fs::path(EQPROP_SOURCE_DIR) / "data" / "mnist-5k";
  const Dataset train = load_mnist_dir(dir, true);
  const Dataset test = load_mnist_dir(dir, false);
  CHECK(train.size() == 4000);
  CHECK(test.size() == 1000);
  CHECK(train.images[0].size() == 784);
  std::vector<int> counts(10, 0);
  for (int l : test.labels)
    ++counts[static_cast<std::size_t>(l)];
  for (int c : counts)
    CHECK(c == 100);
  for (double v : train.images[0]) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(train.slice(3990, 100).size() == 10);
}

TEST_CASE("one-hot targets") {
  CHECK(one_hot(3) == Vector{0, 0, 0, 1, 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(one_hot(10), Error);
}

TEST_CASE("batches partition each epoch") {
  const auto bs = batches(100, 20, 5, 0);
  CHECK(bs.size() == 5);
  std::vector<std::size_t> all;
  for (const auto &b : bs) {
    CHECK(b.size() == 20);
    all.insert(all.end(), b.begin(), b.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i)
    CHECK(all[i] == i);
  CHECK(batches(100, 20, 5, 0) == bs);
  CHECK_FALSE(batches(100, 20, 5, 1) == bs);
  const auto short_tail = batches(45, 20, 5, 0);
  CHECK(short_tail.size() == 3);
  CHECK(short_tail.back().size() == 5);
}

TEST_CASE("epoch order is a permutation for any seed") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto order = epoch_order(257, seed, seed % 3);
    const std::set<std::size_t> uniq(order.begin(), order.end());
    CHECK(order.size() == 257);
    CHECK(uniq.size() == 257);
    CHECK(*uniq.rbegin() == 256);
  }
}

TEST_CASE("make_batch") {
  Dataset d;
  d.rows = 1;
  d.cols = 2;
  d.images = {Vector{0.1, 0.2}, Vector{0.3, 0.4}, Vector{0.5, 0.6}};
  d.labels = {2, 0, 9};
  const std::vector<std::size_t> idx{2, 0};
  const Batch b = make_batch(d, idx);
  CHECK(b.inputs[0] == Vector{0.5, 0.6});
  CHECK(b.labels == std::vector<int>{9, 2});
  CHECK(b.targets[1] == one_hot(2));
}
