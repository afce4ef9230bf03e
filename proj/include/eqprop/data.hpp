// SPDX-License-Identifier: Apache-2.0
/**
 * @file data.hpp
 * @brief MNIST IDX reader/writer and deterministic mini-batching.
 *
 * Files are read through zlib, so gzipped and plain IDX files load the same
 * way. Pixels are scaled to [0, 1].
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eqprop/numerics.hpp"

namespace eqprop {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct Dataset {
  std::size_t rows = 28;
  std::size_t cols = 28;
  std::vector<Vector> images; // rows * cols values in [0, 1]
  std::vector<int> labels;    // 0..9

  std::size_t size() const noexcept { return images.size(); }
  /// The first `count` samples starting at `begin` (clipped to the end).
  Dataset slice(std::size_t begin, std::size_t count) const;
};

/// Errors: IoError (missing/unreadable), WrongMagic, Truncated, CountMismatch.
Dataset load_mnist_idx(const std::filesystem::path &images, const std::filesystem::path &labels);

/// Writes uncompressed IDX files; pixels are stored as round(255 v).
void write_idx(const Dataset &data, const std::filesystem::path &images,
               const std::filesystem::path &labels);

/// Standard MNIST file names inside `dir`, with or without ".gz".
/// `train` selects the train-* pair, otherwise t10k-*.
Dataset load_mnist_dir(const std::filesystem::path &dir, bool train);

Vector one_hot(int label, std::size_t classes = 10);

/// Sample order of one epoch: a permutation of [0, n) fixed by (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Index batches of one epoch; the last batch may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch);

struct Batch {
  std::vector<Vector> inputs;
  std::vector<Vector> targets; // one-hot
  std::vector<int> labels;
};

Batch make_batch(const Dataset &data, std::span<const std::size_t> indices, std::size_t classes = 10);

} // namespace eqprop
