// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "speedest/metrics.hpp"

namespace speedest::cli {

/// Seams for the integration tests; the shipped binary never sets them.
struct TestHooks {
  /// Replaces the checkpoint model's predictions in `eval`.
  metrics::Predictor eval_predictor;
};

/// Runs one CLI invocation (args exclude the program name). Human-readable
/// output goes to out, diagnostics to err. Exit codes: 0 success, 2
/// config/usage error, 3 data or I/O error, 4 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr, const TestHooks* hooks = nullptr);

int run(int argc, char** argv);

}  // namespace speedest::cli
