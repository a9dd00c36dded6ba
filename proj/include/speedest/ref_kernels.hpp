// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include "speedest/tensor.hpp"

namespace speedest::ref {

// Serial reference kernels: straight-line loop nests with no OpenMP and no
// shared code with the production kernels. The test suites use them as
// independent oracles and the benchmark tool compares against them.

/// Plain triple-loop matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Direct sliding-window temporal convolution, kernel 3, zero padding.
/// x: [T x C_in], w: [3 x C_in x C_out], b: [C_out] -> [T x C_out].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

/// Affine map y = x w + b applied row by row.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace speedest::ref
