// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "speedest/common.hpp"
#include "speedest/grad_check.hpp"
#include "speedest/synth.hpp"
#include "speedest/train.hpp"

using namespace speedest;
using models::ModelConfig;
using models::SpeedModel;
using models::Variant;
using train::TrainConfig;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "speedest_train_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ModelConfig small_model(Variant v = Variant::lstm) {
  ModelConfig cfg = ModelConfig::defaults(v);
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.seq_len = 10;
  return cfg;
}

TrainConfig quick_train(int epochs, std::uint64_t seed = 9) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.batch_size = 16;
  cfg.window_stride = 3;
  cfg.val_fraction = 0.2;
  return cfg;
}

/// Small mixed dataset of exactly-labeled synthetic tracks.
std::vector<dataio::Track> small_dataset(int n_tracks, std::uint64_t seed,
                                         double lateral_fraction = 0.5, int n_frames = 24) {
  synth::DatasetConfig cfg;
  cfg.n_tracks = n_tracks;
  cfg.seed = seed;
  cfg.lateral_fraction = lateral_fraction;
  cfg.proto.n_frames = n_frames;
  return synth::generate_dataset(cfg);
}

bool params_equal(const ParamSet& a, const ParamSet& b) {
  if (a.names() != b.names()) return false;
  for (const auto& name : a.names()) {
    const Tensor& pa = a.param(name);
    const Tensor& pb = b.param(name);
    if (!pa.same_shape(pb)) return false;
    for (std::int64_t i = 0; i < pa.numel(); ++i) {
      if (pa(i) != pb(i)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("mse_loss: values, gradients, errors") {
  const Tensor p = Tensor::vec({3.0});
  const Tensor t = Tensor::vec({1.0});
  const auto [loss, grad] = train::mse_loss(p, t);
  CHECK(loss == 4.0);
  CHECK(grad(0) == 4.0);

  const auto [zero_loss, zero_grad] = train::mse_loss(t, t);
  CHECK(zero_loss == 0.0);
  CHECK(zero_grad(0) == 0.0);

  CHECK_THROWS_AS(train::mse_loss(Tensor({2}), Tensor({3})), NumericError);

  // gradient against central differences
  Rng rng(3);
  Tensor pred({5}), target({5});
  for (int i = 0; i < 5; ++i) {
    pred(i) = rng.uniform(-2, 2);
    target(i) = rng.uniform(-2, 2);
  }
  const Tensor fd = finite_diff_grad(
      [&](const Tensor& probe) { return train::mse_loss(probe, target).first; }, pred);
  const Tensor analytic = train::mse_loss(pred, target).second;
  for (int i = 0; i < 5; ++i) CHECK(std::fabs(fd(i) - analytic(i)) < 1e-8);
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
  ParamSet ps;
  ps.add("w", Tensor::vec({1.0, -2.0, 3.0}));
  train::AdamState adam(ps);
  TrainConfig cfg;
  adam.step(ps, cfg);
  CHECK(ps.param("w")(0) == 1.0);
  CHECK(ps.param("w")(1) == -2.0);
  CHECK(ps.param("w")(2) == 3.0);
}

TEST_CASE("adam: first bias-corrected step is approximately -lr * sign(g)") {
  ParamSet ps;
  ps.add("w", Tensor::vec({1.0, 1.0}));
  ps.grad("w")(0) = 0.5;
  ps.grad("w")(1) = -3.0;
  train::AdamState adam(ps);
  TrainConfig cfg;
  cfg.lr = 0.01;
  adam.step(ps, cfg);
  CHECK(std::fabs(ps.param("w")(0) - (1.0 - 0.01)) < 1e-9);
  CHECK(std::fabs(ps.param("w")(1) - (1.0 + 0.01)) < 1e-9);
}

TEST_CASE("adam: drives a scalar quadratic toward zero") {
  ParamSet ps;
  ps.add("w", Tensor::vec({1.0}));
  train::AdamState adam(ps);
  TrainConfig cfg;
  cfg.lr = 0.1;
  for (int step = 0; step < 200; ++step) {
    ps.grad("w")(0) = 2.0 * ps.param("w")(0);  // d/dw of w^2
    adam.step(ps, cfg);
  }
  CHECK(std::fabs(ps.param("w")(0)) < 0.05);
}

TEST_CASE("holdout_split: deterministic, clamped, disjoint") {
  const auto [fit, val] = train::holdout_split(10, 0.2, 5);
  CHECK(fit.size() == 8);
  CHECK(val.size() == 2);
  const auto [fit2, val2] = train::holdout_split(10, 0.2, 5);
  CHECK(fit == fit2);
  CHECK(val == val2);

  std::vector<bool> seen(10, false);
  for (auto i : fit) seen[i] = true;
  for (auto i : val) {
    CHECK(!seen[i]);
    seen[i] = true;
  }
  for (bool s : seen) CHECK(s);

  const auto [tiny_fit, tiny_val] = train::holdout_split(2, 0.01, 1);
  CHECK(tiny_fit.size() == 1);
  CHECK(tiny_val.size() == 1);
}

TEST_CASE("train: constant labels are learned almost immediately") {
  // every label is 60: the de-standardization alone pins predictions there
  synth::CameraConfig cam;
  std::vector<dataio::Track> tracks;
  for (int i = 0; i < 8; ++i) {
    synth::ScenarioConfig scn;
    scn.kind = synth::ScenarioKind::lateral;
    scn.speed_kmh = 60.0;
    scn.n_frames = 24;
    scn.noise_px_std = 0.5;
    scn.seed = 1000 + i;
    scn.y_center_m = 0.1 * i;
    tracks.push_back(synth::generate_track(scn, cam, "const-" + std::to_string(i)));
  }
  Rng rng(4);
  SpeedModel model = models::build(small_model(), rng);
  const auto result = train::train(std::move(model), tracks, quick_train(5));
  REQUIRE(result.history.size() <= 5);
  const auto pred = models::predict_track(result.model, tracks[0]);
  CHECK(std::fabs(pred.speed_kmh - 60.0) < 0.5);
}

TEST_CASE("train: same seed gives identical history and parameters") {
  const auto tracks = small_dataset(14, 8);
  const TrainConfig cfg = quick_train(3);

  Rng rng_a(cfg.seed);
  const auto a = train::train(models::build(small_model(), rng_a), tracks, cfg);
  Rng rng_b(cfg.seed);
  const auto b = train::train(models::build(small_model(), rng_b), tracks, cfg);

  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_rmse == b.history[i].val_rmse);
  }
  CHECK(params_equal(a.model.params, b.model.params));
}

TEST_CASE("train: history accounting with and without early stopping") {
  const auto tracks = small_dataset(12, 10);
  TrainConfig cfg = quick_train(4);
  cfg.early_stop_patience = 100;  // never triggers within the budget
  Rng rng(cfg.seed);
  const auto result = train::train(models::build(small_model(), rng), tracks, cfg);
  CHECK(result.history.size() == 4);
  CHECK(result.best_epoch < static_cast<int>(result.history.size()));
  CHECK(result.best_val_rmse == result.history[result.best_epoch].val_rmse);

  double best_seen = std::numeric_limits<double>::infinity();
  for (const auto& epoch : result.history) best_seen = std::min(best_seen, epoch.val_rmse);
  CHECK(result.best_val_rmse == best_seen);
}

TEST_CASE("train: validation labels never reach statistics or updates") {
  auto tracks = small_dataset(12, 21);
  TrainConfig cfg = quick_train(2, 33);
  cfg.early_stop_patience = 1000;
  cfg.restore_best = false;  // compare the raw end-of-run parameters

  // all tracks are long enough, so train() filters nothing and its holdout
  // indices refer to this list directly
  const auto [fit_idx, val_idx] = train::holdout_split(tracks.size(), cfg.val_fraction, cfg.seed);
  REQUIRE(val_idx.size() >= 2);

  Rng rng_a(cfg.seed);
  const auto a = train::train(models::build(small_model(), rng_a), tracks, cfg);

  // permute the labels among the validation tracks only
  auto permuted = tracks;
  for (std::size_t i = 0; i < val_idx.size(); ++i) {
    permuted[val_idx[i]].speed_kmh = tracks[val_idx[(i + 1) % val_idx.size()]].speed_kmh;
  }
  Rng rng_b(cfg.seed);
  const auto b = train::train(models::build(small_model(), rng_b), permuted, cfg);

  CHECK(params_equal(a.model.params, b.model.params));
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
  }
  // the monitoring signal does change
  bool any_val_diff = false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    any_val_diff = any_val_diff || a.history[i].val_rmse != b.history[i].val_rmse;
  }
  CHECK(any_val_diff);
}

TEST_CASE("train: unlabeled or too-short data is rejected") {
  auto tracks = small_dataset(6, 40);
  tracks[2].speed_kmh.reset();
  Rng rng(1);
  CHECK_THROWS_WITH_AS(
      train::train(models::build(small_model(), rng), tracks, quick_train(1)),
      doctest::Contains(tracks[2].track_id.c_str()), DataError);

  // all tracks shorter than seq_len + 1
  const auto stubs = small_dataset(4, 41, 0.5, 8);
  Rng rng2(1);
  CHECK_THROWS_AS(train::train(models::build(small_model(), rng2), stubs, quick_train(1)),
                  DataError);
}

TEST_CASE("train: runaway learning rate aborts with a numeric error") {
  const auto tracks = small_dataset(10, 50);
  TrainConfig cfg = quick_train(2);
  cfg.lr = 1e308;
  Rng rng(2);
  CHECK_THROWS_WITH_AS(train::train(models::build(small_model(), rng), tracks, cfg),
                       doctest::Contains("non-finite"), NumericError);
}

TEST_CASE("train: loss decreases on the synthetic default dataset") {
  synth::DatasetConfig dcfg;  // 400 tracks, seed 42
  const auto tracks = synth::generate_dataset(dcfg);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 7;
  Rng rng(cfg.seed);
  const auto result =
      train::train(models::build(ModelConfig::defaults(Variant::lstm), rng), tracks, cfg);
  REQUIRE(result.history.size() == 5);
  CHECK(result.history[4].train_loss < result.history[0].train_loss);
}

TEST_CASE("checkpoint: save/load round-trip is prediction-exact") {
  const auto tracks = small_dataset(10, 60);
  const TrainConfig cfg = quick_train(2);
  Rng rng(cfg.seed);
  const auto result = train::train(models::build(small_model(), rng), tracks, cfg);

  const auto path = temp_path("roundtrip.ckpt.json");
  train::save_checkpoint(result.model, cfg, static_cast<int>(result.history.size()),
                         result.best_val_rmse, path);
  const train::Checkpoint loaded = train::load_checkpoint(path);

  CHECK(loaded.best_val_rmse == result.best_val_rmse);
  CHECK(loaded.train_config.seed == cfg.seed);
  CHECK(params_equal(loaded.model.params, result.model.params));
  for (int j = 0; j < features::kFeatureDim; ++j) {
    CHECK(loaded.model.norm_stats.mean[j] == result.model.norm_stats.mean[j]);
    CHECK(loaded.model.norm_stats.std[j] == result.model.norm_stats.std[j]);
  }

  for (const auto& track : tracks) {
    const auto a = models::predict_track(result.model, track);
    const auto b = models::predict_track(loaded.model, track);
    CHECK(a.speed_kmh == b.speed_kmh);
    REQUIRE(a.per_window.size() == b.per_window.size());
    for (std::size_t w = 0; w < a.per_window.size(); ++w) {
      CHECK(a.per_window[w] == b.per_window[w]);
    }
  }
}

TEST_CASE("checkpoint: corrupt and wrong-version files are rejected") {
  const auto tracks = small_dataset(8, 70);
  const TrainConfig cfg = quick_train(1);
  Rng rng(cfg.seed);
  const auto result = train::train(models::build(small_model(), rng), tracks, cfg);
  const auto path = temp_path("tamper.ckpt.json");
  train::save_checkpoint(result.model, cfg, 1, result.best_val_rmse, path);

  // truncate
  std::string blob;
  {
    std::ifstream in(path);
    std::getline(in, blob, '\0');
  }
  const auto cut = temp_path("truncated.ckpt.json");
  {
    std::ofstream out(cut);
    out << blob.substr(0, blob.size() / 2);
  }
  CHECK_THROWS_WITH_AS(train::load_checkpoint(cut), doctest::Contains("corrupt"), DataError);

  // version bump
  const auto versioned = temp_path("version.ckpt.json");
  {
    std::ofstream out(versioned);
    const std::string needle = "\"version\":1";
    const auto pos = blob.find(needle);
    REQUIRE(pos != std::string::npos);
    std::string patched = blob;
    patched.replace(pos, needle.size(), "\"version\":9");
    out << patched;
  }
  CHECK_THROWS_WITH_AS(train::load_checkpoint(versioned), doctest::Contains("version"), DataError);

  CHECK_THROWS_AS(train::load_checkpoint(temp_path("missing.ckpt.json")), IoError);
}
