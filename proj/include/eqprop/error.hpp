// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace eqprop {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  Divergence,
  NotConverged,
  UntiedNetwork,
  IoError,
  WrongMagic,
  Truncated,
  CountMismatch,
  ParseError,
};

const char *to_string(ErrorCode code) noexcept;

/// Base error for the library. The code distinguishes failure classes that
/// callers (the CLI in particular) map to exit statuses.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of the numerics (divergence, oracle mismatch) as
  /// opposed to bad input.
  bool numerical() const noexcept {
    return code_ == ErrorCode::NonFinite || code_ == ErrorCode::Divergence ||
           code_ == ErrorCode::NotConverged;
  }

private:
  ErrorCode code_;
};

} // namespace eqprop
