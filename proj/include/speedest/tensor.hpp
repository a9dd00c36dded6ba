// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "speedest/rng.hpp"

namespace speedest {

/// Dense real n-dimensional array, row-major, 64-bit precision throughout.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape. Dimensions must be positive.
  explicit Tensor(std::vector<std::int64_t> shape);

  static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::int64_t> shape, double value);
  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> values);
  static Tensor vec(std::initializer_list<double> values);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::int64_t rows() const { assert(rank() == 2); return shape_[0]; }
  std::int64_t cols() const { assert(rank() == 2); return shape_[1]; }

  double& operator()(std::int64_t i) { return data_[i]; }
  const double& operator()(std::int64_t i) const { return data_[i]; }
  double& operator()(std::int64_t i, std::int64_t j) { return data_[i * shape_[1] + j]; }
  const double& operator()(std::int64_t i, std::int64_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const double& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  double* row_ptr(std::int64_t i) { return data_.data() + i * shape_.back(); }
  const double* row_ptr(std::int64_t i) const { return data_.data() + i * shape_.back(); }

  /// Same data, new shape; element count must match.
  Tensor reshaped(std::vector<std::int64_t> shape) const;

  /// Copy of row i of a rank-2 tensor as a rank-1 tensor.
  Tensor row(std::int64_t i) const;

  /// Copy of slab i along axis 0 (rank-3 -> rank-2).
  Tensor slab(std::int64_t i) const;

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Kernels. The heavier ones run their outer loop under OpenMP when the work
// justifies it; every parallel loop writes disjoint outputs and keeps a fixed
// per-element summation order, so results are bit-identical for any thread
// count. Serial reference implementations live in speedest/ref_kernels.hpp.
// ---------------------------------------------------------------------------

/// Standard matrix product, a[m x k] * b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T * b with a[k x m], b[k x n] -> [m x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// a * b^T with a[m x k], b[n x k] -> [m x n].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& m);

// Elementwise ops. Binary forms require equal shapes; the scalar overloads
// are the only supported broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);

double sigmoid_scalar(double x);

/// Softmax of a rank-1 tensor, computed with max-subtraction.
Tensor softmax(const Tensor& x);
/// In-place softmax of every row of a rank-2 tensor.
void softmax_rows_inplace(Tensor& m);

enum class InitScheme { xavier_uniform, zeros, ones };

/// Parameter initialization. xavier_uniform draws from U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)); fans follow the usual conventions
/// (rank-1: n/n, rank-2 [in x out]: in/out, rank-3 [k x in x out]:
/// k*in / k*out).
Tensor init_param(std::vector<std::int64_t> shape, InitScheme scheme, Rng& rng);

/// Ordered collection of named parameters with same-shaped gradient slots.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor init);

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::int64_t total_params() const;

  void zero_grads();
  /// grads += other.grads, walked in this set's insertion order.
  void accumulate_grads(const ParamSet& other);
  void scale_grads(double s);
  double grad_l2_norm() const;

  /// Same names and parameter shapes, zero-valued params and grads.
  ParamSet clone_shapes() const;

 private:
  std::size_t idx(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<Tensor> params_;
  std::vector<Tensor> grads_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace speedest
