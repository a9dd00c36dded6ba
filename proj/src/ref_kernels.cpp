// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/ref_kernels.hpp"

#include "speedest/common.hpp"

namespace speedest::ref {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw NumericError("ref::matmul: incompatible shapes");
  }
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += a(i, kk) * b(kk, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::int64_t t_len = x.rows(), c_in = x.cols(), c_out = w.dim(2);
  if (w.rank() != 3 || w.dim(0) != 3 || w.dim(1) != c_in || b.numel() != c_out) {
    throw NumericError("ref::conv1d: incompatible shapes");
  }
  Tensor out({t_len, c_out});
  for (std::int64_t t = 0; t < t_len; ++t) {
    for (std::int64_t co = 0; co < c_out; ++co) {
      double acc = b(co);
      for (std::int64_t k = -1; k <= 1; ++k) {
        const std::int64_t src = t + k;
        if (src < 0 || src >= t_len) continue;
        for (std::int64_t ci = 0; ci < c_in; ++ci) acc += w(k + 1, ci, co) * x(src, ci);
      }
      out(t, co) = acc;
    }
  }
  return out;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::int64_t n = x.rows(), c_in = x.cols(), c_out = w.cols();
  if (w.rows() != c_in || b.numel() != c_out) throw NumericError("ref::dense: incompatible shapes");
  Tensor out({n, c_out});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < c_out; ++j) {
      double acc = b(j);
      for (std::int64_t kk = 0; kk < c_in; ++kk) acc += x(i, kk) * w(kk, j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace speedest::ref
