// SPDX-License-Identifier: Apache-2.0
/**
 * @file numerics.hpp
 * @brief Dense row-major storage, activations and the angle metric.
 *
 * Everything is 64-bit. The limit checks of the gradient-equivalence suite
 * compare quantities that differ by factors of beta or eta down to 1e-5, which
 * single precision cannot resolve.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "eqprop/error.hpp"

namespace eqprop {

using Vector = std::vector<double>;

class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  double *data() noexcept { return data_.data(); }
  const double *data() const noexcept { return data_.data(); }

  Matrix transposed() const;
  void fill(double v);

  bool operator==(const Matrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = A x
void gemv(const Matrix &a, std::span<const double> x, std::span<double> y);
// y += A x
void gemv_acc(const Matrix &a, std::span<const double> x, std::span<double> y);
// y += A^T x
void gemv_t_acc(const Matrix &a, std::span<const double> x, std::span<double> y);
// A += alpha * u v^T
void ger(double alpha, std::span<const double> u, std::span<const double> v, Matrix &a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

enum class ActivationKind { Tanh, ShiftedSigmoid, Identity };

std::string_view to_string(ActivationKind kind) noexcept;
ActivationKind parse_activation(std::string_view name);

double activate(ActivationKind kind, double x) noexcept;
double activate_deriv(ActivationKind kind, double x) noexcept;

/// Elementwise sigma(v). Throws ErrorCode::NonFinite on non-finite input.
Vector activation_apply(ActivationKind kind, std::span<const double> v);
/// Elementwise sigma'(v). Throws ErrorCode::NonFinite on non-finite input.
Vector activation_derivative(ActivationKind kind, std::span<const double> v);

/// arccos of the normalised inner product, in degrees within [0, 180].
/// Throws when either argument has zero norm or the lengths differ.
double angle_between(std::span<const double> a, std::span<const double> b);

/// Cosine similarity; throws like angle_between.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> v) noexcept;

} // namespace eqprop
