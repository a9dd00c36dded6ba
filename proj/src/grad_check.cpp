// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/grad_check.hpp"

#include <cmath>

#include "speedest/common.hpp"

namespace speedest {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps) {
  if (eps <= 0.0) throw NumericError("finite_diff_grad: eps must be positive");
  Tensor g(x.shape());
  const std::int64_t n = x.numel();
  bool bad = false;
#pragma omp parallel for schedule(static) if (n >= 64)
  for (std::int64_t i = 0; i < n; ++i) {
    Tensor probe = x;
    probe(i) = x(i) + eps;
    const double fp = f(probe);
    probe(i) = x(i) - eps;
    const double fm = f(probe);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      bad = true;
      continue;
    }
    g(i) = (fp - fm) / (2.0 * eps);
  }
  if (bad) throw NumericError("finite_diff_grad: objective returned a non-finite value");
  return g;
}

double max_rel_error(const Tensor& a, const Tensor& b, double abs_floor) {
  if (!a.same_shape(b)) throw NumericError("max_rel_error: shape mismatch");
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double denom = std::max({std::fabs(a(i)), std::fabs(b(i)), abs_floor});
    worst = std::max(worst, std::fabs(a(i) - b(i)) / denom);
  }
  return worst;
}

}  // namespace speedest
