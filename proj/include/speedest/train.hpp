// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "speedest/models.hpp"

namespace speedest::train {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int batch_size = 32;
  int epochs = 60;
  std::uint64_t seed = 0;
  int early_stop_patience = 10;  // epochs without val RMSE improvement
  double val_fraction = 0.1;     // of the training tracks, held out per run
  int window_stride = 5;         // training window stride (prediction uses 1)
  double clip_norm = 5.0;        // global L2 gradient clip
  bool restore_best = true;      // return best-validation parameters

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;  // mean squared error over training windows, km/h^2
  double val_rmse = 0.0;    // per-track RMSE on the held-out tracks, km/h
};

struct TrainResult {
  models::SpeedModel model;
  std::vector<EpochStats> history;
  int best_epoch = 0;          // 0-based index into history
  double best_val_rmse = 0.0;
  double final_train_loss = 0.0;
};

/// loss = (1/B) sum (pred - target)^2, grad = (2/B)(pred - target).
std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target);

/// The deterministic track-level holdout used inside train(): shuffles
/// 0..n_tracks-1 with the seed-derived stream and peels off
/// round(val_fraction * n) validation indices (at least 1, at most n-1).
/// Returns (fit_indices, val_indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::size_t n_tracks, double val_fraction, std::uint64_t seed);

/// Adam with bias correction. Moments live here; step() consumes the
/// gradients accumulated in the ParamSet and updates parameters in place.
class AdamState {
 public:
  explicit AdamState(const ParamSet& params);
  void step(ParamSet& params, const TrainConfig& cfg);
  std::int64_t step_index() const { return t_; }

 private:
  ParamSet m_;
  ParamSet v_;
  std::int64_t t_ = 0;
};

/// Full training run: track-level train/validation split, normalization and
/// target statistics fitted on the training portion only, per-epoch window
/// shuffling, MSE + Adam with gradient clipping, early stopping on
/// validation RMSE. Deterministic for a fixed (tracks, configs, seed).
TrainResult train(models::SpeedModel model, const std::vector<dataio::Track>& tracks,
                  const TrainConfig& cfg);

inline constexpr int kCheckpointVersion = 1;

/// Single JSON document: {version, model_config, train_config, norm_stats,
/// target_stats, params: {name: {shape, data}}, epoch, best_val_rmse}.
/// Parameter values round-trip exactly; a loaded model predicts bit-exactly.
void save_checkpoint(const models::SpeedModel& model, const TrainConfig& cfg, int epoch,
                     double best_val_rmse, const std::filesystem::path& path);

struct Checkpoint {
  models::SpeedModel model;
  TrainConfig train_config;
  int epoch = 0;
  double best_val_rmse = 0.0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace speedest::train
