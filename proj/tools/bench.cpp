// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors
//
// Compares the OpenMP production kernels against the serial reference
// implementations on representative shapes, checking bit-identity along the
// way. The parallel kernels keep a fixed per-element summation order, so the
// outputs must match the serial ones exactly at any thread count.

#include <chrono>
#include <cstdio>
#include <functional>

#include "speedest/layers.hpp"
#include "speedest/models.hpp"
#include "speedest/ref_kernels.hpp"
#include "speedest/rng.hpp"
#include "speedest/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using speedest::Rng;
using speedest::Tensor;

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t(i) = rng.uniform(-1.0, 1.0);
  return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (a(i) != b(i)) return false;
  }
  return true;
}

void report(const char* name, double serial_ms, double parallel_ms, double gflop, bool identical) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %7.2f GFLOP/s   bit-identical: %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              gflop / (parallel_ms * 1e-3) / 1e9, identical ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled at build time\n");
#endif

  Rng rng(7);

  {
    const std::int64_t n = 384;
    const Tensor a = random_tensor({n, n}, rng);
    const Tensor b = random_tensor({n, n}, rng);
    Tensor out_serial, out_parallel;
    const double serial = time_ms([&] { out_serial = speedest::ref::matmul(a, b); }, 3);
    const double parallel = time_ms([&] { out_parallel = speedest::matmul(a, b); }, 3);
    report("matmul 384x384x384", serial, parallel, 2.0 * n * n * n,
           bit_equal(out_serial, out_parallel));
  }

  {
    const std::int64_t t_len = 4096, c = 64;
    const Tensor x = random_tensor({t_len, c}, rng);
    const Tensor w = random_tensor({3, c, c}, rng);
    const Tensor b = random_tensor({c}, rng);
    Tensor out_serial, out_parallel;
    const double serial = time_ms([&] { out_serial = speedest::ref::conv1d(x, w, b); }, 5);
    const double parallel =
        time_ms([&] { out_parallel = speedest::layers::conv1d_forward(x, w, b); }, 5);
    report("conv1d T=4096 C=64", serial, parallel, 2.0 * 3 * t_len * c * c,
           bit_equal(out_serial, out_parallel));
  }

  {
    // Whole-model batch forward: one window at a time vs the batched
    // (OpenMP-across-samples) path.
    const auto cfg = speedest::models::ModelConfig::defaults(speedest::models::Variant::lstm);
    Rng build_rng(11);
    const auto model = speedest::models::build(cfg, build_rng);
    const std::int64_t b_size = 64;
    const Tensor batch = random_tensor({b_size, cfg.seq_len, cfg.input_dim}, rng);

    Tensor preds_serial({b_size});
    const double serial = time_ms(
        [&] {
          for (std::int64_t i = 0; i < b_size; ++i) {
            Tensor one({1, cfg.seq_len, cfg.input_dim});
            std::copy(batch.data() + i * cfg.seq_len * cfg.input_dim,
                      batch.data() + (i + 1) * cfg.seq_len * cfg.input_dim, one.data());
            preds_serial(i) = speedest::models::forward(model, one, false).first(0);
          }
        },
        3);
    Tensor preds_parallel;
    const double parallel =
        time_ms([&] { preds_parallel = speedest::models::forward(model, batch, false).first; }, 3);
    report("lstm forward B=64", serial, parallel, 0.0, bit_equal(preds_serial, preds_parallel));
  }

  return 0;
}
