// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "speedest/common.hpp"
#include "speedest/serde.hpp"

namespace speedest::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("train config: lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("train config: betas must be in [0,1)");
  }
  if (!(eps_adam > 0)) throw ConfigError("train config: eps_adam must be positive");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("train config: early_stop_patience must be >= 1");
  if (!(val_fraction > 0 && val_fraction < 1)) {
    throw ConfigError("train config: val_fraction must be in (0,1)");
  }
  if (window_stride < 1) throw ConfigError("train config: window_stride must be >= 1");
  if (!(clip_norm > 0)) throw ConfigError("train config: clip_norm must be positive");
}

std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.numel() != target.numel() || pred.numel() < 1) {
    throw NumericError("mse_loss: length mismatch (" + std::to_string(pred.numel()) + " vs " +
                       std::to_string(target.numel()) + ")");
  }
  const std::int64_t n = pred.numel();
  Tensor grad(pred.shape());
  double loss = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = pred(i) - target(i);
    loss += d * d;
    grad(i) = 2.0 * d / static_cast<double>(n);
  }
  return {loss / static_cast<double>(n), grad};
}

AdamState::AdamState(const ParamSet& params)
    : m_(params.clone_shapes()), v_(params.clone_shapes()) {}

void AdamState::step(ParamSet& params, const TrainConfig& cfg) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    Tensor& p = params.param(name);
    const Tensor& g = params.grad(name);
    Tensor& m = m_.param(name);
    Tensor& v = v_.param(name);
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw NumericError("adam: moment/gradient shape mismatch for '" + name + "'");
    }
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      m(i) = cfg.beta1 * m(i) + (1.0 - cfg.beta1) * g(i);
      v(i) = cfg.beta2 * v(i) + (1.0 - cfg.beta2) * g(i) * g(i);
      const double mhat = m(i) / bc1;
      const double vhat = v(i) / bc2;
      p(i) -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps_adam);
    }
  }
}

namespace {

struct PreparedData {
  std::vector<features::FeatureSequence> train_windows;
  std::vector<dataio::Track> val_tracks;
};

double population_std(const std::vector<double>& xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double val_rmse_per_track(const models::SpeedModel& model,
                          const std::vector<dataio::Track>& val_tracks) {
  double acc = 0.0;
  for (const auto& t : val_tracks) {
    const double pred = models::predict_track(model, t).speed_kmh;
    const double err = pred - *t.speed_kmh;
    acc += err * err;
  }
  return std::sqrt(acc / static_cast<double>(val_tracks.size()));
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::size_t n_tracks, double val_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n_tracks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(mix_seed(seed, 0));
  split_rng.shuffle(order);
  auto val_count =
      static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n_tracks)));
  val_count = std::min(std::max<std::size_t>(val_count, 1), n_tracks - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  return {fit, val};
}

TrainResult train(models::SpeedModel model, const std::vector<dataio::Track>& tracks,
                  const TrainConfig& cfg) {
  cfg.validate();
  model.config.validate();

  for (const auto& t : tracks) {
    if (!t.speed_kmh) {
      throw DataError("training requires labeled tracks; track '" + t.track_id +
                      "' has no speed_kmh");
    }
  }
  const int min_frames = model.config.seq_len + 1;
  const auto usable = features::filter_min_length(tracks, min_frames);
  if (usable.size() < 2) {
    throw DataError("training needs at least 2 labeled tracks with >= " +
                    std::to_string(min_frames) + " frames, got " + std::to_string(usable.size()));
  }

  // Track-level validation holdout.
  const auto [fit_idx, val_idx] = holdout_split(usable.size(), cfg.val_fraction, cfg.seed);
  PreparedData data;
  std::vector<dataio::Track> fit_tracks;
  for (std::size_t i : val_idx) data.val_tracks.push_back(usable[i]);
  for (std::size_t i : fit_idx) fit_tracks.push_back(usable[i]);

  // Normalization and target statistics come from the training portion only;
  // the validation tracks never touch them.
  std::vector<features::FeatureSequence> fit_seqs;
  std::vector<double> fit_labels;
  for (const auto& t : fit_tracks) {
    fit_seqs.push_back(features::extract_features(t));
    fit_labels.push_back(*t.speed_kmh);
  }
  model.norm_stats = features::fit_norm_stats(fit_seqs);
  const double target_mean =
      std::accumulate(fit_labels.begin(), fit_labels.end(), 0.0) / static_cast<double>(fit_labels.size());
  model.target_stats.mean = target_mean;
  model.target_stats.std = std::max(population_std(fit_labels, target_mean), 1e-8);

  for (const auto& seq : fit_seqs) {
    const auto norm = features::normalize(seq, model.norm_stats);
    for (auto& w : features::window(norm, model.config.seq_len, cfg.window_stride)) {
      data.train_windows.push_back(std::move(w));
    }
  }
  if (data.train_windows.empty()) {
    throw DataError("training produced no windows; check seq_len against track lengths");
  }

  const std::int64_t t_len = model.config.seq_len;
  const std::int64_t feat = model.config.input_dim;
  const std::size_t n_windows = data.train_windows.size();

  AdamState adam(model.params);
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> idx(n_windows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  TrainResult result;
  ParamSet best_params = model.params;
  double best_rmse = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  std::uint64_t global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(idx);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_windows; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bsz = std::min(static_cast<std::size_t>(cfg.batch_size), n_windows - start);
      Tensor batch({static_cast<std::int64_t>(bsz), t_len, feat});
      Tensor targets({static_cast<std::int64_t>(bsz)});
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto& w = data.train_windows[idx[start + b]];
        std::copy(w.values.data(), w.values.data() + w.values.numel(),
                  batch.data() + static_cast<std::int64_t>(b) * t_len * feat);
        targets(static_cast<std::int64_t>(b)) = *w.label_kmh;
      }
      ++global_step;
      auto [preds, fwd_cache] =
          forward(model, batch, /*train_mode=*/true, mix_seed(cfg.seed, 0xd0 + global_step));
      auto [loss, dpred] = mse_loss(preds, targets);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                           ", step " + std::to_string(global_step) +
                           "; lower the learning rate or inspect the data");
      }
      loss_sum += loss * static_cast<double>(bsz);

      model.params.zero_grads();
      models::backward(model, fwd_cache, dpred, model.params);
      const double gnorm = model.params.grad_l2_norm();
      if (gnorm > cfg.clip_norm) model.params.scale_grads(cfg.clip_norm / gnorm);
      adam.step(model.params, cfg);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n_windows);
    stats.val_rmse = val_rmse_per_track(model, data.val_tracks);
    result.history.push_back(stats);

    if (stats.val_rmse < best_rmse) {
      best_rmse = stats.val_rmse;
      best_epoch = epoch;
      best_params = model.params;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.early_stop_patience) break;
    }
  }

  if (cfg.restore_best) model.params = best_params;
  result.best_epoch = best_epoch;
  result.best_val_rmse = best_rmse;
  result.final_train_loss = result.history.back().train_loss;
  result.model = std::move(model);
  return result;
}

void save_checkpoint(const models::SpeedModel& model, const TrainConfig& cfg, int epoch,
                     double best_val_rmse, const std::filesystem::path& path) {
  json params = json::object();
  for (const auto& name : model.params.names()) {
    const Tensor& p = model.params.param(name);
    params[name] = json{{"shape", p.shape()},
                        {"data", std::vector<double>(p.data(), p.data() + p.numel())}};
  }
  const json doc{{"version", kCheckpointVersion},
                 {"model_config", serde::model_config_to_json(model.config)},
                 {"train_config", serde::train_config_to_json(cfg)},
                 {"norm_stats", serde::norm_stats_to_json(model.norm_stats)},
                 {"target_stats", serde::target_stats_to_json(model.target_stats)},
                 {"params", std::move(params)},
                 {"epoch", epoch},
                 {"best_val_rmse", best_val_rmse}};

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << doc.dump();
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
    throw IoError("cannot move checkpoint into place at '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint '" + path.string() + "': " + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version")) {
      throw DataError("corrupt checkpoint '" + path.string() + "': missing version");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint '" + path.string() + "' has unsupported format version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ckpt;
    const models::ModelConfig mcfg = serde::model_config_from_json(doc.at("model_config"));
    Rng rng(0);
    ckpt.model = models::build(mcfg, rng);
    ckpt.model.norm_stats = serde::norm_stats_from_json(doc.at("norm_stats"));
    ckpt.model.target_stats = serde::target_stats_from_json(doc.at("target_stats"));
    ckpt.train_config = serde::train_config_from_json(doc.at("train_config"));
    ckpt.epoch = doc.at("epoch").get<int>();
    ckpt.best_val_rmse = doc.at("best_val_rmse").get<double>();

    const json& params = doc.at("params");
    if (params.size() != ckpt.model.params.size()) {
      throw DataError("corrupt checkpoint '" + path.string() + "': expected " +
                      std::to_string(ckpt.model.params.size()) + " parameters, found " +
                      std::to_string(params.size()));
    }
    for (const auto& name : ckpt.model.params.names()) {
      if (!params.contains(name)) {
        throw DataError("corrupt checkpoint '" + path.string() + "': missing parameter '" + name +
                        "'");
      }
      const json& entry = params.at(name);
      Tensor& p = ckpt.model.params.param(name);
      const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto values = entry.at("data").get<std::vector<double>>();
      if (shape != p.shape() || static_cast<std::int64_t>(values.size()) != p.numel()) {
        throw DataError("corrupt checkpoint '" + path.string() + "': shape mismatch for '" + name +
                        "'");
      }
      std::copy(values.begin(), values.end(), p.data());
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint '" + path.string() + "': " + e.what());
  }
}

}  // namespace speedest::train
