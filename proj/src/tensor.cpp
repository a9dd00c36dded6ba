// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "speedest/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace speedest {

namespace {

std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw NumericError("tensor dimensions must be positive, got shape " + [&] {
      std::ostringstream os;
      os << "(";
      for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
      os << ")";
      return os.str();
    }());
    n *= d;
  }
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw NumericError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

// Work threshold below which a parallel loop is not worth the fork.
constexpr std::int64_t kParallelFlops = 1 << 15;

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(checked_numel(shape_)), 0.0) {}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> values) {
  Tensor t(std::move(shape));
  if (static_cast<std::int64_t>(values.size()) != t.numel()) {
    throw NumericError("Tensor::from: value count does not match shape " + t.shape_str());
  }
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

Tensor Tensor::vec(std::initializer_list<double> values) {
  return Tensor::from({static_cast<std::int64_t>(values.size())}, std::vector<double>(values));
}

Tensor Tensor::reshaped(std::vector<std::int64_t> shape) const {
  Tensor t(std::move(shape));
  if (t.numel() != numel()) {
    throw NumericError("reshape: element count mismatch " + shape_str() + " -> " + t.shape_str());
  }
  std::copy(data_.begin(), data_.end(), t.data());
  return t;
}

Tensor Tensor::row(std::int64_t i) const {
  assert(rank() == 2);
  Tensor r({shape_[1]});
  std::copy(row_ptr(i), row_ptr(i) + shape_[1], r.data());
  return r;
}

Tensor Tensor::slab(std::int64_t i) const {
  assert(rank() == 3);
  Tensor s({shape_[1], shape_[2]});
  const std::int64_t n = shape_[1] * shape_[2];
  std::copy(data() + i * n, data() + (i + 1) * n, s.data());
  return s;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << ")";
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw NumericError("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  }
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  const bool par = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < m; ++i) {
    double* orow = out.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      const double* brow = b.row_ptr(kk);
      for (std::int64_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw NumericError("matmul_tn: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  }
  const std::int64_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor out({m, n});
  const bool par = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < m; ++i) {
    double* orow = out.row_ptr(i);
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double aki = a(kk, i);
      const double* brow = b.row_ptr(kk);
      for (std::int64_t j = 0; j < n; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw NumericError("matmul_nt: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  }
  const std::int64_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n});
  const bool par = m * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < m; ++i) {
    double* orow = out.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (std::int64_t j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& m) {
  if (m.rank() != 2) throw NumericError("transpose: rank-2 tensor required");
  Tensor out({m.cols(), m.rows()});
  for (std::int64_t i = 0; i < m.rows(); ++i)
    for (std::int64_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

namespace {

template <class F>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f) {
  require_same_shape(a, b, name);
  Tensor out(a.shape());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
#pragma omp parallel for schedule(static) if (n >= kParallelFlops)
  for (std::int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

template <class F>
Tensor unary_op(const Tensor& a, F f) {
  Tensor out(a.shape());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  double* po = out.data();
#pragma omp parallel for schedule(static) if (n >= kParallelFlops)
  for (std::int64_t i = 0; i < n; ++i) po[i] = f(pa[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, "add", [](double x, double y) { return x + y; }); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, "sub", [](double x, double y) { return x - y; }); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, "mul", [](double x, double y) { return x * y; }); }
Tensor add(const Tensor& a, double s) { return unary_op(a, [s](double x) { return x + s; }); }
Tensor mul(const Tensor& a, double s) { return unary_op(a, [s](double x) { return x * s; }); }
Tensor tanh(const Tensor& a) { return unary_op(a, [](double x) { return std::tanh(x); }); }
Tensor relu(const Tensor& a) { return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; }); }

double sigmoid_scalar(double x) {
  // Split form avoids overflow in exp for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& a) { return unary_op(a, sigmoid_scalar); }

Tensor exp(const Tensor& a) {
  Tensor out = unary_op(a, [](double x) { return std::exp(x); });
  if (!out.all_finite()) throw NumericError("exp: non-finite result");
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 || x.numel() < 1) throw NumericError("softmax: non-empty rank-1 tensor required");
  Tensor out(x.shape());
  const std::int64_t n = x.numel();
  double mx = x(0);
  for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, x(i));
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    out(i) = std::exp(x(i) - mx);
    sum += out(i);
  }
  for (std::int64_t i = 0; i < n; ++i) out(i) /= sum;
  return out;
}

void softmax_rows_inplace(Tensor& m) {
  assert(m.rank() == 2);
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    double* row = m.row_ptr(i);
    const std::int64_t n = m.cols();
    double mx = row[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::int64_t j = 0; j < n; ++j) row[j] /= sum;
  }
}

Tensor init_param(std::vector<std::int64_t> shape, InitScheme scheme, Rng& rng) {
  Tensor t(std::move(shape));
  switch (scheme) {
    case InitScheme::zeros:
      break;
    case InitScheme::ones:
      t.fill(1.0);
      break;
    case InitScheme::xavier_uniform: {
      double fan_in = 0.0, fan_out = 0.0;
      const auto& s = t.shape();
      if (s.size() == 1) {
        fan_in = fan_out = static_cast<double>(s[0]);
      } else if (s.size() == 2) {
        fan_in = static_cast<double>(s[0]);
        fan_out = static_cast<double>(s[1]);
      } else if (s.size() == 3) {
        fan_in = static_cast<double>(s[0] * s[1]);
        fan_out = static_cast<double>(s[0] * s[2]);
      } else {
        throw NumericError("init_param: xavier supports rank 1..3, got " + t.shape_str());
      }
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (std::int64_t i = 0; i < t.numel(); ++i) t(i) = rng.uniform(-a, a);
      break;
    }
  }
  return t;
}

Tensor& ParamSet::add(const std::string& name, Tensor init) {
  if (has(name)) throw NumericError("ParamSet: duplicate parameter name '" + name + "'");
  index_[name] = names_.size();
  names_.push_back(name);
  grads_.emplace_back(Tensor::zeros(init.shape()));
  params_.push_back(std::move(init));
  return params_.back();
}

std::size_t ParamSet::idx(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw NumericError("ParamSet: unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamSet::param(const std::string& name) { return params_[idx(name)]; }
const Tensor& ParamSet::param(const std::string& name) const { return params_[idx(name)]; }
Tensor& ParamSet::grad(const std::string& name) { return grads_[idx(name)]; }
const Tensor& ParamSet::grad(const std::string& name) const { return grads_[idx(name)]; }

std::int64_t ParamSet::total_params() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

void ParamSet::zero_grads() {
  for (auto& g : grads_) g.fill(0.0);
}

void ParamSet::accumulate_grads(const ParamSet& other) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const Tensor& og = other.grads_[other.idx(names_[i])];
    Tensor& g = grads_[i];
    for (std::int64_t j = 0; j < g.numel(); ++j) g(j) += og(j);
  }
}

void ParamSet::scale_grads(double s) {
  for (auto& g : grads_)
    for (std::int64_t j = 0; j < g.numel(); ++j) g(j) *= s;
}

double ParamSet::grad_l2_norm() const {
  double acc = 0.0;
  for (const auto& g : grads_)
    for (std::int64_t j = 0; j < g.numel(); ++j) acc += g(j) * g(j);
  return std::sqrt(acc);
}

ParamSet ParamSet::clone_shapes() const {
  ParamSet out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], Tensor::zeros(params_[i].shape()));
  return out;
}

}  // namespace speedest
