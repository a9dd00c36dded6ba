// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/features.hpp"

#include <cmath>

#include "speedest/common.hpp"

namespace speedest::features {

FeatureSequence extract_features(const dataio::Track& track) {
  const auto& frames = track.frames;
  if (frames.size() < 2) {
    throw DataError("track '" + track.track_id + "': need at least 2 frames to extract features, got " +
                    std::to_string(frames.size()));
  }
  const std::int64_t t_len = static_cast<std::int64_t>(frames.size()) - 1;
  FeatureSequence seq;
  seq.track_id = track.track_id;
  seq.label_kmh = track.speed_kmh;
  seq.values = Tensor({t_len, kFeatureDim});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const auto& a = frames[t];
    const auto& b = frames[t + 1];
    if (b.frame_idx - a.frame_idx != 1) {
      throw DataError("track '" + track.track_id + "': non-unit frame gap between frames " +
                      std::to_string(a.frame_idx) + " and " + std::to_string(b.frame_idx));
    }
    const double dx1 = b.box.x1 - a.box.x1;
    const double dy1 = b.box.y1 - a.box.y1;
    const double dx2 = b.box.x2 - a.box.x2;
    const double dy2 = b.box.y2 - a.box.y2;
    double* row = seq.values.row_ptr(t);
    row[0] = dx1;
    row[1] = dy1;
    row[2] = dx2;
    row[3] = dy2;
    row[4] = 0.5 * (dx1 + dx2);
    row[5] = 0.5 * (dy1 + dy2);
    row[6] = dx2 - dx1;
    row[7] = dy2 - dy1;
  }
  return seq;
}

std::vector<dataio::Track> filter_min_length(const std::vector<dataio::Track>& tracks,
                                             int min_frames) {
  if (min_frames < 2) throw ConfigError("filter_min_length: min_frames must be >= 2");
  std::vector<dataio::Track> kept;
  for (const auto& t : tracks) {
    if (t.n_frames() >= min_frames) kept.push_back(t);
  }
  return kept;
}

NormStats fit_norm_stats(const std::vector<FeatureSequence>& sequences) {
  std::int64_t n_rows = 0;
  std::array<double, kFeatureDim> sum{};
  sum.fill(0.0);
  for (const auto& seq : sequences) {
    for (std::int64_t t = 0; t < seq.length(); ++t) {
      const double* row = seq.values.row_ptr(t);
      for (int j = 0; j < kFeatureDim; ++j) sum[j] += row[j];
    }
    n_rows += seq.length();
  }
  if (n_rows == 0) throw DataError("fit_norm_stats: no feature rows to fit on");

  NormStats stats;
  for (int j = 0; j < kFeatureDim; ++j) stats.mean[j] = sum[j] / static_cast<double>(n_rows);

  std::array<double, kFeatureDim> sq{};
  sq.fill(0.0);
  for (const auto& seq : sequences) {
    for (std::int64_t t = 0; t < seq.length(); ++t) {
      const double* row = seq.values.row_ptr(t);
      for (int j = 0; j < kFeatureDim; ++j) {
        const double d = row[j] - stats.mean[j];
        sq[j] += d * d;
      }
    }
  }
  for (int j = 0; j < kFeatureDim; ++j) {
    stats.std[j] = std::max(std::sqrt(sq[j] / static_cast<double>(n_rows)), kStdFloor);
  }
  return stats;
}

FeatureSequence normalize(const FeatureSequence& seq, const NormStats& stats) {
  FeatureSequence out = seq;
  for (std::int64_t t = 0; t < out.length(); ++t) {
    double* row = out.values.row_ptr(t);
    for (int j = 0; j < kFeatureDim; ++j) row[j] = (row[j] - stats.mean[j]) / stats.std[j];
  }
  return out;
}

FeatureSequence denormalize(const FeatureSequence& seq, const NormStats& stats) {
  FeatureSequence out = seq;
  for (std::int64_t t = 0; t < out.length(); ++t) {
    double* row = out.values.row_ptr(t);
    for (int j = 0; j < kFeatureDim; ++j) row[j] = row[j] * stats.std[j] + stats.mean[j];
  }
  return out;
}

std::vector<FeatureSequence> window(const FeatureSequence& seq, int seq_len, int stride) {
  if (seq_len < 1) throw ConfigError("window: seq_len must be >= 1");
  if (stride < 1) throw ConfigError("window: stride must be >= 1");
  std::vector<FeatureSequence> out;
  const std::int64_t t_len = seq.length();
  for (std::int64_t start = 0; start + seq_len <= t_len; start += stride) {
    FeatureSequence w;
    w.track_id = seq.track_id;
    w.label_kmh = seq.label_kmh;
    w.values = Tensor({seq_len, kFeatureDim});
    for (std::int64_t t = 0; t < seq_len; ++t) {
      const double* src = seq.values.row_ptr(start + t);
      std::copy(src, src + kFeatureDim, w.values.row_ptr(t));
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace speedest::features
