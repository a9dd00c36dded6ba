// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "speedest/common.hpp"

namespace speedest::metrics {

double accuracy_pct(double predicted, double actual) {
  if (actual == 0.0) throw DataError("accuracy_pct: actual speed is zero");
  return (1.0 - std::fabs(predicted - actual) / std::fabs(actual)) * 100.0;
}

double rmse(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw DataError("rmse: no pairs");
  double acc = 0.0;
  for (const auto& [predicted, actual] : pairs) {
    const double d = predicted - actual;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

namespace {

Metrics reduce(std::vector<SampleMetric> rows) {
  Metrics m;
  m.n = static_cast<int>(rows.size());
  std::vector<std::pair<double, double>> pairs;
  double acc_sum = 0.0;
  for (const auto& r : rows) {
    acc_sum += r.accuracy_pct;
    pairs.emplace_back(r.predicted_kmh, r.actual_kmh);
  }
  m.mean_accuracy_pct = acc_sum / static_cast<double>(rows.size());
  m.rmse_kmh = rmse(pairs);
  m.per_sample = std::move(rows);
  return m;
}

void check_evaluable(const models::SpeedModel& model, const std::vector<dataio::Track>& tracks) {
  if (tracks.empty()) throw DataError("evaluate: no tracks");
  std::string unlabeled, too_short;
  const std::int64_t need = model.config.seq_len + 1;
  for (const auto& t : tracks) {
    if (!t.speed_kmh) unlabeled += (unlabeled.empty() ? "" : ", ") + t.track_id;
    if (t.n_frames() < need) too_short += (too_short.empty() ? "" : ", ") + t.track_id;
  }
  if (!unlabeled.empty()) {
    throw DataError("evaluate: tracks without speed_kmh labels: " + unlabeled);
  }
  if (!too_short.empty()) {
    throw DataError("evaluate: tracks shorter than seq_len+1 = " + std::to_string(need) +
                    " frames: " + too_short);
  }
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move report into place at '" + path.string() + "'");
  }
}

}  // namespace

Metrics evaluate(const models::SpeedModel& model, const std::vector<dataio::Track>& tracks,
                 bool per_window) {
  check_evaluable(model, tracks);
  const std::int64_t n = static_cast<std::int64_t>(tracks.size());
  std::vector<models::TrackPrediction> preds(tracks.size());
  std::exception_ptr first_error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      preds[static_cast<std::size_t>(i)] =
          models::predict_track(model, tracks[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SampleMetric> rows;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const double actual = *tracks[i].speed_kmh;
    if (per_window) {
      for (std::size_t w = 0; w < preds[i].per_window.size(); ++w) {
        const double p = preds[i].per_window[w];
        rows.push_back(SampleMetric{tracks[i].track_id + ":" + std::to_string(w), actual, p,
                                    accuracy_pct(p, actual)});
      }
    } else {
      const double p = preds[i].speed_kmh;
      rows.push_back(SampleMetric{tracks[i].track_id, actual, p, accuracy_pct(p, actual)});
    }
  }
  return reduce(std::move(rows));
}

Metrics evaluate_with(const Predictor& predict, const std::vector<dataio::Track>& tracks) {
  if (tracks.empty()) throw DataError("evaluate: no tracks");
  std::vector<SampleMetric> rows;
  for (const auto& t : tracks) {
    if (!t.speed_kmh) throw DataError("evaluate: track '" + t.track_id + "' has no label");
    const double p = predict(t);
    rows.push_back(SampleMetric{t.track_id, *t.speed_kmh, p, accuracy_pct(p, *t.speed_kmh)});
  }
  return reduce(std::move(rows));
}

std::string scatter_file_name(const ReportEntry& entry) {
  return "scatter_" + entry.model + "_" + entry.dataset + ".csv";
}

void emit_report(const std::vector<ReportEntry>& entries, const std::filesystem::path& dir) {
  if (entries.empty()) throw DataError("emit_report: no entries");
  std::filesystem::create_directories(dir);

  std::ostringstream summary;
  summary << "model,dataset,mean_accuracy_pct,rmse_kmh,n\n";
  for (const auto& e : entries) {
    summary << e.model << ',' << e.dataset << ',' << fmt4(e.metrics.mean_accuracy_pct) << ','
            << fmt4(e.metrics.rmse_kmh) << ',' << e.metrics.n << '\n';

    std::ostringstream scatter;
    scatter << "track_id,actual_kmh,predicted_kmh\n";
    for (const auto& r : e.metrics.per_sample) {
      scatter << r.track_id << ',' << fmt4(r.actual_kmh) << ',' << fmt4(r.predicted_kmh) << '\n';
    }
    write_atomic(dir / scatter_file_name(e), scatter.str());
  }
  write_atomic(dir / "summary.csv", summary.str());
}

}  // namespace speedest::metrics
