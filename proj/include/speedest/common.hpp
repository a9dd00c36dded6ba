// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <stdexcept>
#include <string>

namespace speedest {

/// Bad configuration: invalid hyperparameters, malformed config files,
/// unusable CLI invocations. Maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad or unusable data: parse failures, invariant violations, tracks the
/// pipeline cannot consume. Maps to exit code 3 in the CLI.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failures while reading or writing artifacts. Maps to exit
/// code 3 in the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric breakdown: non-finite losses, diverged training, shape errors
/// deep in the kernels. Maps to exit code 4 in the CLI.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kKmhPerMps = 3.6;

}  // namespace speedest
