// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <functional>

#include "speedest/tensor.hpp"

namespace speedest {

/// Central-difference gradient of a scalar function of a tensor:
/// g[i] = (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
/// Elements are probed independently, so the loop runs under OpenMP when the
/// tensor is large; each probe works on its own copy of x. Throws
/// NumericError if f returns a non-finite value.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-4);

/// Largest element-wise relative error between two same-shaped tensors,
/// |a - b| / max(|a|, |b|, abs_floor). The floor keeps near-zero entries from
/// dominating the comparison.
double max_rel_error(const Tensor& a, const Tensor& b, double abs_floor = 1e-6);

}  // namespace speedest
