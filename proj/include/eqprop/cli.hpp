// SPDX-License-Identifier: Apache-2.0
/**
 * @file cli.hpp
 * @brief The `eqprop` command line: toy, gdd, rbp-check, train, eval,
 *        angle-init-check.
 *
 * Exit status: 0 success, 1 usage or input error, 2 numerical failure
 * (divergence, non-convergence, failed oracle check).
 */
#pragma once

#include <filesystem>
#include <ostream>

namespace eqprop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// --mnist-dir when given, else $EQPROP_MNIST_DIR, else the directory the
/// build was configured with.
std::filesystem::path resolve_mnist_dir(const std::filesystem::path &flag);

} // namespace eqprop
