// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "speedest/dataio.hpp"
#include "speedest/tensor.hpp"

namespace speedest::features {

/// Number of per-step features: corner deltas (dx1, dy1, dx2, dy2), center
/// displacement (dcx, dcy), and dimension changes (dw, dh), in that order.
inline constexpr int kFeatureDim = 8;

/// T x 8 matrix of frame-delta features for one track (or one window of it).
struct FeatureSequence {
  Tensor values;  // [T x 8]
  std::string track_id;
  std::optional<double> label_kmh;

  std::int64_t length() const { return values.numel() == 0 ? 0 : values.rows(); }
};

/// Per-feature normalization statistics, population convention (divide by N).
/// std components are floored at 1e-8 so constant features stay usable.
struct NormStats {
  std::array<double, kFeatureDim> mean{};
  std::array<double, kFeatureDim> std{};

  NormStats() {
    mean.fill(0.0);
    std.fill(1.0);
  }
};

inline constexpr double kStdFloor = 1e-8;

/// Row t holds the deltas frame[t+1] - frame[t]. Requires >= 2 frames and
/// unit frame-index gaps.
FeatureSequence extract_features(const dataio::Track& track);

/// Keeps exactly the tracks with frame count >= min_frames, order preserved.
std::vector<dataio::Track> filter_min_length(const std::vector<dataio::Track>& tracks,
                                             int min_frames);

/// Population mean/std per feature over all rows of all sequences.
NormStats fit_norm_stats(const std::vector<FeatureSequence>& sequences);

/// out[t][j] = (in[t][j] - mean[j]) / std[j].
FeatureSequence normalize(const FeatureSequence& seq, const NormStats& stats);

/// Inverse of normalize.
FeatureSequence denormalize(const FeatureSequence& seq, const NormStats& stats);

/// Every contiguous window of exactly seq_len rows starting at multiples of
/// stride. A sequence shorter than seq_len yields an empty list. Windows
/// inherit track_id and label.
std::vector<FeatureSequence> window(const FeatureSequence& seq, int seq_len, int stride);

}  // namespace speedest::features
