// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "speedest/dataio.hpp"
#include "speedest/features.hpp"
#include "speedest/layers.hpp"
#include "speedest/tensor.hpp"

namespace speedest::models {

enum class Variant { rnn, lstm, gru, transformer };

std::string variant_name(Variant v);
/// Throws ConfigError naming the valid variants.
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::lstm;
  int input_dim = features::kFeatureDim;
  int embed_dim = 32;
  int hidden_dim = 64;
  int n_layers = 1;  // encoder depth / recurrent stack depth
  int n_heads = 4;
  int d_ff = 128;
  double dropout_p = 0.1;
  int seq_len = 20;
  bool use_positional_encoding = true;

  /// Defaults per variant: n_layers 2 for transformer, 1 for the recurrent
  /// family; everything else as the member initializers.
  static ModelConfig defaults(Variant v);

  void validate() const;  // throws ConfigError
};

/// Grouped encoder hyperparameters (transformer variant).
struct EncoderConfig {
  int d_model = 32;
  int n_heads = 4;
  int d_ff = 128;
  int n_layers = 2;
  double dropout_p = 0.1;

  void validate() const;
};

EncoderConfig encoder_config(const ModelConfig& cfg);

/// Label standardization fitted on the training split.
struct TargetStats {
  double mean = 0.0;
  double std = 1.0;
};

struct SpeedModel {
  ModelConfig config;
  ParamSet params;
  features::NormStats norm_stats;
  TargetStats target_stats;
};

/// All parameters initialized (xavier for weights, zeros for biases, ones
/// for layer-norm gains), deterministic per rng seed.
SpeedModel build(const ModelConfig& config, Rng& rng);

// Per-sample activation caches for the two pipelines.
struct RecurrentSampleCache {
  layers::Conv1dCache conv_in;
  std::vector<layers::RnnSeqCache> rnn;
  std::vector<layers::LstmSeqCache> lstm;
  std::vector<layers::GruSeqCache> gru;
  layers::TemporalAttentionCache attn;
  layers::Conv1dCache conv_out;
  layers::DenseCache head;
};
struct TransformerSampleCache {
  layers::Conv1dCache conv_in;
  std::vector<layers::EncoderLayerCache> enc;
  layers::DenseCache fc1;
  Tensor fc1_pre;
  layers::DropoutCache drop;
  layers::DenseCache head;
};
struct ForwardCache {
  bool train_mode = false;
  std::int64_t batch_size = 0;
  std::vector<RecurrentSampleCache> rec;
  std::vector<TransformerSampleCache> tr;
};

/// Forward pass over a batch [B x seq_len x input_dim] of already-normalized
/// windows. Returns de-standardized predictions in km/h, one per sample.
/// Samples are processed independently (OpenMP across the batch);
/// dropout_seed plus the sample index determine the train-mode dropout masks,
/// so results do not depend on the thread count.
std::pair<Tensor, ForwardCache> forward(const SpeedModel& model, const Tensor& batch,
                                        bool train_mode, std::uint64_t dropout_seed = 0);

/// Accumulates parameter gradients for the whole batch into grads (zero it
/// first for a plain gradient). The batch gradient is the sum of per-sample
/// gradients, reduced in sample order.
void backward(const SpeedModel& model, const ForwardCache& cache, const Tensor& grad_pred,
              ParamSet& grads);
ParamSet backward(const SpeedModel& model, const ForwardCache& cache, const Tensor& grad_pred);

struct TrackPrediction {
  double speed_kmh = 0.0;
  std::vector<double> per_window;
};

/// Slides a stride-1 window over the track's features, normalizes with the
/// model's stats, and averages the per-window predictions. Throws DataError
/// if the track yields no window at the model's seq_len.
TrackPrediction predict_track(const SpeedModel& model, const dataio::Track& track);

}  // namespace speedest::models
