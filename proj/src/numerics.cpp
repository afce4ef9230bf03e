// SPDX-License-Identifier: Apache-2.0

#include "eqprop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eqprop/kernels.hpp"

namespace eqprop {

const char *to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidArgument: return "invalid argument";
  case ErrorCode::DimensionMismatch: return "dimension mismatch";
  case ErrorCode::NonFinite: return "non-finite value";
  case ErrorCode::Divergence: return "divergence";
  case ErrorCode::NotConverged: return "not converged";
  case ErrorCode::UntiedNetwork: return "untied network";
  case ErrorCode::IoError: return "i/o error";
  case ErrorCode::WrongMagic: return "wrong magic number";
  case ErrorCode::Truncated: return "truncated file";
  case ErrorCode::CountMismatch: return "count mismatch";
  case ErrorCode::ParseError: return "parse error";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw Error(ErrorCode::DimensionMismatch,
                "matrix data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c)
      t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {

void require(bool ok, const char *what) {
  if (!ok)
    throw Error(ErrorCode::DimensionMismatch, what);
}

} // namespace

void gemv(const Matrix &a, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  gemv_acc(a, x, y);
}

void gemv_acc(const Matrix &a, std::span<const double> x, std::span<double> y) {
  require(x.size() == a.cols() && y.size() == a.rows(), "gemv: shape mismatch");
  kernels::active().gemv_acc(a.data(), a.rows(), a.cols(), x.data(), y.data());
}

void gemv_t_acc(const Matrix &a, std::span<const double> x, std::span<double> y) {
  require(x.size() == a.rows() && y.size() == a.cols(), "gemv_t: shape mismatch");
  kernels::active().gemv_t_acc(a.data(), a.rows(), a.cols(), x.data(), y.data());
}

void ger(double alpha, std::span<const double> u, std::span<const double> v, Matrix &a) {
  require(u.size() == a.rows() && v.size() == a.cols(), "ger: shape mismatch");
  kernels::active().ger(alpha, u.data(), u.size(), v.data(), v.size(), a.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
  case ActivationKind::Tanh: return "tanh";
  case ActivationKind::ShiftedSigmoid: return "sigmoid";
  case ActivationKind::Identity: return "identity";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "tanh")
    return ActivationKind::Tanh;
  if (name == "sigmoid" || name == "shifted_sigmoid")
    return ActivationKind::ShiftedSigmoid;
  if (name == "identity" || name == "linear")
    return ActivationKind::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(name) + "'");
}

double activate(ActivationKind kind, double x) noexcept {
  switch (kind) {
  case ActivationKind::Tanh: return std::tanh(x);
  case ActivationKind::ShiftedSigmoid: return 1.0 / (1.0 + std::exp(-4.0 * (x - 0.5)));
  case ActivationKind::Identity: return x;
  }
  return x;
}

double activate_deriv(ActivationKind kind, double x) noexcept {
  switch (kind) {
  case ActivationKind::Tanh: {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  }
  case ActivationKind::ShiftedSigmoid: {
    const double s = 1.0 / (1.0 + std::exp(-4.0 * (x - 0.5)));
    return 4.0 * s * (1.0 - s);
  }
  case ActivationKind::Identity: return 1.0;
  }
  return 1.0;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector activation_apply(ActivationKind kind, std::span<const double> v) {
  if (!all_finite(v))
    throw Error(ErrorCode::NonFinite, "activation_apply: non-finite input");
  Vector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [kind](double x) { return activate(kind, x); });
  return out;
}

Vector activation_derivative(ActivationKind kind, std::span<const double> v) {
  if (!all_finite(v))
    throw Error(ErrorCode::NonFinite, "activation_derivative: non-finite input");
  Vector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(),
                 [kind](double x) { return activate_deriv(kind, x); });
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "cosine: length mismatch");
  // Plain loops keep the metric independent of the kernel variant.
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0)
    throw Error(ErrorCode::InvalidArgument, "angle undefined for a zero-norm vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double angle_between(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "angle: length mismatch");
  double aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0)
    throw Error(ErrorCode::InvalidArgument, "angle undefined for a zero-norm vector");
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  // 2 atan2(|a^ - b^|, |a^ + b^|) stays accurate near 0 and 180 degrees,
  // where acos of the cosine loses half the digits.
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = a[i] / na, v = b[i] / nb;
    diff += (u - v) * (u - v);
    sum += (u + v) * (u + v);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) * 180.0 / std::numbers::pi;
}

} // namespace eqprop
