// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/cli.hpp"

int main(int argc, char** argv) { return speedest::cli::run(argc, argv); }
