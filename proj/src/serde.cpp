// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/serde.hpp"

#include <fstream>
#include <set>

#include "speedest/common.hpp"
#include "speedest/train.hpp"

namespace speedest::serde {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError(what + ": unknown key '" + it.key() + "'");
    }
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& what) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

json model_config_to_json(const models::ModelConfig& cfg) {
  return json{{"variant", models::variant_name(cfg.variant)},
              {"input_dim", cfg.input_dim},
              {"embed_dim", cfg.embed_dim},
              {"hidden_dim", cfg.hidden_dim},
              {"n_layers", cfg.n_layers},
              {"n_heads", cfg.n_heads},
              {"d_ff", cfg.d_ff},
              {"dropout_p", cfg.dropout_p},
              {"seq_len", cfg.seq_len},
              {"use_positional_encoding", cfg.use_positional_encoding}};
}

models::ModelConfig model_config_from_json(const json& j) {
  const std::string what = "model config";
  require_object(j, what);
  reject_unknown_keys(j,
                      {"variant", "input_dim", "embed_dim", "hidden_dim", "n_layers", "n_heads",
                       "d_ff", "dropout_p", "seq_len", "use_positional_encoding"},
                      what);
  const std::string variant = get_or<std::string>(j, "variant", "lstm", what);
  models::ModelConfig cfg = models::ModelConfig::defaults(models::variant_from_name(variant));
  cfg.input_dim = get_or(j, "input_dim", cfg.input_dim, what);
  cfg.embed_dim = get_or(j, "embed_dim", cfg.embed_dim, what);
  cfg.hidden_dim = get_or(j, "hidden_dim", cfg.hidden_dim, what);
  cfg.n_layers = get_or(j, "n_layers", cfg.n_layers, what);
  cfg.n_heads = get_or(j, "n_heads", cfg.n_heads, what);
  cfg.d_ff = get_or(j, "d_ff", cfg.d_ff, what);
  cfg.dropout_p = get_or(j, "dropout_p", cfg.dropout_p, what);
  cfg.seq_len = get_or(j, "seq_len", cfg.seq_len, what);
  cfg.use_positional_encoding =
      get_or(j, "use_positional_encoding", cfg.use_positional_encoding, what);
  cfg.validate();
  return cfg;
}

json train_config_to_json(const train::TrainConfig& cfg) {
  return json{{"lr", cfg.lr},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"eps_adam", cfg.eps_adam},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"seed", cfg.seed},
              {"early_stop_patience", cfg.early_stop_patience},
              {"val_fraction", cfg.val_fraction},
              {"window_stride", cfg.window_stride},
              {"clip_norm", cfg.clip_norm},
              {"restore_best", cfg.restore_best}};
}

train::TrainConfig train_config_from_json(const json& j) {
  const std::string what = "train config";
  require_object(j, what);
  reject_unknown_keys(j,
                      {"lr", "beta1", "beta2", "eps_adam", "batch_size", "epochs", "seed",
                       "early_stop_patience", "val_fraction", "window_stride", "clip_norm",
                       "restore_best"},
                      what);
  train::TrainConfig cfg;
  cfg.lr = get_or(j, "lr", cfg.lr, what);
  cfg.beta1 = get_or(j, "beta1", cfg.beta1, what);
  cfg.beta2 = get_or(j, "beta2", cfg.beta2, what);
  cfg.eps_adam = get_or(j, "eps_adam", cfg.eps_adam, what);
  cfg.batch_size = get_or(j, "batch_size", cfg.batch_size, what);
  cfg.epochs = get_or(j, "epochs", cfg.epochs, what);
  cfg.seed = get_or(j, "seed", cfg.seed, what);
  cfg.early_stop_patience = get_or(j, "early_stop_patience", cfg.early_stop_patience, what);
  cfg.val_fraction = get_or(j, "val_fraction", cfg.val_fraction, what);
  cfg.window_stride = get_or(j, "window_stride", cfg.window_stride, what);
  cfg.clip_norm = get_or(j, "clip_norm", cfg.clip_norm, what);
  cfg.restore_best = get_or(j, "restore_best", cfg.restore_best, what);
  cfg.validate();
  return cfg;
}

json norm_stats_to_json(const features::NormStats& s) {
  return json{{"mean", s.mean}, {"std", s.std}};
}

features::NormStats norm_stats_from_json(const json& j) {
  const std::string what = "norm stats";
  require_object(j, what);
  reject_unknown_keys(j, {"mean", "std"}, what);
  features::NormStats s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto std_ = j.at("std").get<std::vector<double>>();
  if (mean.size() != features::kFeatureDim || std_.size() != features::kFeatureDim) {
    throw ConfigError(what + ": expected " + std::to_string(features::kFeatureDim) +
                      " components");
  }
  std::copy(mean.begin(), mean.end(), s.mean.begin());
  std::copy(std_.begin(), std_.end(), s.std.begin());
  return s;
}

json target_stats_to_json(const models::TargetStats& s) {
  return json{{"mean", s.mean}, {"std", s.std}};
}

models::TargetStats target_stats_from_json(const json& j) {
  const std::string what = "target stats";
  require_object(j, what);
  reject_unknown_keys(j, {"mean", "std"}, what);
  models::TargetStats s;
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  return s;
}

synth::DatasetConfig dataset_config_from_json(const json& j) {
  const std::string what = "dataset config";
  require_object(j, what);
  reject_unknown_keys(
      j, {"n_tracks", "speed_range", "lateral_fraction", "seed", "camera", "scenario"}, what);
  synth::DatasetConfig cfg;
  cfg.n_tracks = get_or(j, "n_tracks", cfg.n_tracks, what);
  if (j.contains("speed_range")) {
    const auto r = j.at("speed_range").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError(what + ": speed_range must be [lo, hi]");
    cfg.speed_lo_kmh = r[0];
    cfg.speed_hi_kmh = r[1];
  }
  cfg.lateral_fraction = get_or(j, "lateral_fraction", cfg.lateral_fraction, what);
  cfg.seed = get_or(j, "seed", cfg.seed, what);
  if (j.contains("camera")) {
    const json& c = j.at("camera");
    const std::string cw = "camera config";
    require_object(c, cw);
    reject_unknown_keys(c, {"focal_px", "cx", "cy", "image_w", "image_h", "fps"}, cw);
    cfg.camera.focal_px = get_or(c, "focal_px", cfg.camera.focal_px, cw);
    cfg.camera.cx = get_or(c, "cx", cfg.camera.cx, cw);
    cfg.camera.cy = get_or(c, "cy", cfg.camera.cy, cw);
    cfg.camera.image_w = get_or(c, "image_w", cfg.camera.image_w, cw);
    cfg.camera.image_h = get_or(c, "image_h", cfg.camera.image_h, cw);
    cfg.camera.fps = get_or(c, "fps", cfg.camera.fps, cw);
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    const std::string sw = "scenario config";
    require_object(s, sw);
    reject_unknown_keys(
        s, {"n_frames", "noise_px_std", "depth_m", "vehicle_w_m", "vehicle_h_m", "vehicle_l_m"},
        sw);
    cfg.proto.n_frames = get_or(s, "n_frames", cfg.proto.n_frames, sw);
    cfg.proto.noise_px_std = get_or(s, "noise_px_std", cfg.proto.noise_px_std, sw);
    cfg.proto.depth_m = get_or(s, "depth_m", cfg.proto.depth_m, sw);
    cfg.proto.vehicle_w_m = get_or(s, "vehicle_w_m", cfg.proto.vehicle_w_m, sw);
    cfg.proto.vehicle_h_m = get_or(s, "vehicle_h_m", cfg.proto.vehicle_h_m, sw);
    cfg.proto.vehicle_l_m = get_or(s, "vehicle_l_m", cfg.proto.vehicle_l_m, sw);
  }
  cfg.validate();
  return cfg;
}

json dataset_config_to_json(const synth::DatasetConfig& cfg) {
  return json{{"n_tracks", cfg.n_tracks},
              {"speed_range", {cfg.speed_lo_kmh, cfg.speed_hi_kmh}},
              {"lateral_fraction", cfg.lateral_fraction},
              {"seed", cfg.seed},
              {"camera",
               {{"focal_px", cfg.camera.focal_px},
                {"cx", cfg.camera.cx},
                {"cy", cfg.camera.cy},
                {"image_w", cfg.camera.image_w},
                {"image_h", cfg.camera.image_h},
                {"fps", cfg.camera.fps}}},
              {"scenario",
               {{"n_frames", cfg.proto.n_frames},
                {"noise_px_std", cfg.proto.noise_px_std},
                {"depth_m", cfg.proto.depth_m},
                {"vehicle_w_m", cfg.proto.vehicle_w_m},
                {"vehicle_h_m", cfg.proto.vehicle_h_m},
                {"vehicle_l_m", cfg.proto.vehicle_l_m}}}};
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace speedest::serde
