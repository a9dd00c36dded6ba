// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "speedest/models.hpp"

namespace speedest::metrics {

struct SampleMetric {
  std::string track_id;
  double actual_kmh = 0.0;
  double predicted_kmh = 0.0;
  double accuracy_pct = 0.0;
};

struct Metrics {
  std::vector<SampleMetric> per_sample;
  double mean_accuracy_pct = 0.0;
  double rmse_kmh = 0.0;
  int n = 0;
};

/// (1 - |predicted - actual| / |actual|) * 100. May be negative for gross
/// errors; never clamped. Throws DataError when actual == 0.
double accuracy_pct(double predicted, double actual);

/// sqrt((1/N) sum (predicted_i - actual_i)^2) over (predicted, actual) pairs.
double rmse(const std::vector<std::pair<double, double>>& pairs);

using Predictor = std::function<double(const dataio::Track&)>;

/// One per_sample row per track; mean accuracy is the unweighted mean over
/// tracks and RMSE runs over the per-track (predicted, actual) pairs.
/// All tracks must be labeled and long enough; offenders are listed.
/// per_window = true switches the rows to one per window for diagnostics.
Metrics evaluate(const models::SpeedModel& model, const std::vector<dataio::Track>& tracks,
                 bool per_window = false);

/// Same reductions with an injected predictor (used by tests and tools).
Metrics evaluate_with(const Predictor& predict, const std::vector<dataio::Track>& tracks);

struct ReportEntry {
  std::string model;
  std::string dataset;
  Metrics metrics;
};

/// Writes summary.csv (model, dataset, mean_accuracy_pct, rmse_kmh, n) plus
/// one scatter CSV per entry (track_id, actual_kmh, predicted_kmh). Floats
/// carry 4 decimal places. Files land atomically in dir.
void emit_report(const std::vector<ReportEntry>& entries, const std::filesystem::path& dir);

std::string scatter_file_name(const ReportEntry& entry);

}  // namespace speedest::metrics
