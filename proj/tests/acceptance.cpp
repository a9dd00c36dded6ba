// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors
//
// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any hard criterion fails.
// The gating comparison is a statistical claim and is marked soft: a failure
// there demands investigation notes, not an automatic reject.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "speedest/cli.hpp"
#include "speedest/grad_check.hpp"
#include "speedest/metrics.hpp"
#include "speedest/models.hpp"
#include "speedest/synth.hpp"
#include "speedest/train.hpp"

using namespace speedest;
using models::ModelConfig;
using models::SpeedModel;
using models::Variant;

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Learning-sanity thresholds. Pinned from the recorded calibration run on
// this synthetic benchmark (default dataset, seed 42; default TrainConfig,
// seed 7): accuracy/RMSE achieved minus a safety margin, never looser than
// the provisional envelope (85% / 8 km/h, LSTM 90% / 6 km/h).
constexpr double kMinAccuracyAll = 85.0;
constexpr double kMaxRmseAll = 8.0;
constexpr double kMinAccuracyLstm = 90.0;
constexpr double kMaxRmseLstm = 6.0;
// ---------------------------------------------------------------------------

struct Outcome {
  std::string name;
  bool pass = false;
  bool soft = false;
  std::string detail;
};

double elapsed_s(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t(i) = rng.uniform(lo, hi);
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& wt) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < y.numel(); ++i) acc += y(i) * wt(i);
  return acc;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "speedest_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ------------------------------------------------------- criterion helpers

/// Worst relative error across every layer-level finite-difference check.
double layer_gradient_sweep(std::uint64_t seed) {
  using namespace speedest::layers;
  Rng rng(seed);
  double worst = 0.0;
  const auto track = [&worst](double err) { worst = std::max(worst, err); };

  {  // dense
    const Tensor x = random_tensor({4, 3}, rng), w = random_tensor({3, 2}, rng);
    const Tensor b = random_tensor({2}, rng), wt = random_tensor({4, 2}, rng);
    DenseCache cache;
    dense_forward(x, w, b, &cache);
    Tensor dw({3, 2}), db({2});
    const Tensor dx = dense_backward(cache, w, wt, dw, db);
    track(max_rel_error(dw, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(dense_forward(x, p, b), wt);
    }, w)));
    track(max_rel_error(db, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(dense_forward(x, w, p), wt);
    }, b)));
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(dense_forward(p, w, b), wt);
    }, x)));
  }
  {  // conv1d
    const Tensor x = random_tensor({6, 3}, rng), w = random_tensor({3, 3, 4}, rng);
    const Tensor b = random_tensor({4}, rng), wt = random_tensor({6, 4}, rng);
    Conv1dCache cache;
    conv1d_forward(x, w, b, &cache);
    Tensor dw({3, 3, 4}), db({4});
    const Tensor dx = conv1d_backward(cache, w, wt, dw, db);
    track(max_rel_error(dw, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(conv1d_forward(x, p, b), wt);
    }, w)));
    track(max_rel_error(db, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(conv1d_forward(x, w, p), wt);
    }, b)));
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(conv1d_forward(p, w, b), wt);
    }, x)));
  }
  {  // rnn over 5 steps
    const Tensor x = random_tensor({5, 3}, rng), w = random_tensor({7, 4}, rng, -0.7, 0.7);
    const Tensor b = random_tensor({4}, rng), wt = random_tensor({5, 4}, rng);
    RnnSeqCache cache;
    rnn_forward(x, w, b, &cache);
    Tensor dw({7, 4}), db({4});
    const Tensor dx = rnn_backward(cache, w, wt, dw, db);
    track(max_rel_error(dw, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(rnn_forward(x, p, b, nullptr), wt);
    }, w)));
    track(max_rel_error(db, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(rnn_forward(x, w, p, nullptr), wt);
    }, b)));
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(rnn_forward(p, w, b, nullptr), wt);
    }, x)));
  }
  {  // lstm over 5 steps
    const Tensor x = random_tensor({5, 3}, rng), w = random_tensor({7, 16}, rng, -0.5, 0.5);
    const Tensor b = random_tensor({16}, rng, -0.2, 0.2), wt = random_tensor({5, 4}, rng);
    LstmSeqCache cache;
    lstm_forward(x, w, b, &cache);
    Tensor dw({7, 16}), db({16});
    const Tensor dx = lstm_backward(cache, w, wt, dw, db);
    track(max_rel_error(dw, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(lstm_forward(x, p, b, nullptr), wt);
    }, w)));
    track(max_rel_error(db, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(lstm_forward(x, w, p, nullptr), wt);
    }, b)));
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& p) {
      return weighted_sum(lstm_forward(p, w, b, nullptr), wt);
    }, x)));
  }
  {  // gru over 5 steps
    const Tensor x = random_tensor({5, 3}, rng);
    const Tensor w_zr = random_tensor({7, 8}, rng, -0.5, 0.5);
    const Tensor b_zr = random_tensor({8}, rng, -0.2, 0.2);
    const Tensor w_xn = random_tensor({3, 4}, rng, -0.5, 0.5);
    const Tensor w_hn = random_tensor({4, 4}, rng, -0.5, 0.5);
    const Tensor b_n = random_tensor({4}, rng, -0.2, 0.2);
    const Tensor wt = random_tensor({5, 4}, rng);
    GruSeqCache cache;
    gru_forward(x, w_zr, b_zr, w_xn, w_hn, b_n, &cache);
    Tensor dw_zr({7, 8}), db_zr({8}), dw_xn({3, 4}), dw_hn({4, 4}), db_n({4});
    const Tensor dx = gru_backward(cache, w_zr, w_xn, w_hn, wt, dw_zr, db_zr, dw_xn, dw_hn, db_n);
    const auto run = [&](const Tensor& a, const Tensor& b, const Tensor& c, const Tensor& d,
                         const Tensor& e, const Tensor& in) {
      return weighted_sum(gru_forward(in, a, b, c, d, e, nullptr), wt);
    };
    track(max_rel_error(dw_zr, finite_diff_grad([&](const Tensor& p) {
      return run(p, b_zr, w_xn, w_hn, b_n, x);
    }, w_zr)));
    track(max_rel_error(db_zr, finite_diff_grad([&](const Tensor& p) {
      return run(w_zr, p, w_xn, w_hn, b_n, x);
    }, b_zr)));
    track(max_rel_error(dw_xn, finite_diff_grad([&](const Tensor& p) {
      return run(w_zr, b_zr, p, w_hn, b_n, x);
    }, w_xn)));
    track(max_rel_error(dw_hn, finite_diff_grad([&](const Tensor& p) {
      return run(w_zr, b_zr, w_xn, p, b_n, x);
    }, w_hn)));
    track(max_rel_error(db_n, finite_diff_grad([&](const Tensor& p) {
      return run(w_zr, b_zr, w_xn, w_hn, p, x);
    }, b_n)));
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& p) {
      return run(w_zr, b_zr, w_xn, w_hn, b_n, p);
    }, x)));
  }
  {  // temporal attention
    const Tensor h = random_tensor({5, 4}, rng), w = random_tensor({4, 4}, rng);
    const Tensor v = random_tensor({4}, rng), wt = random_tensor({5, 4}, rng);
    TemporalAttentionCache cache;
    temporal_attention_forward(h, w, v, &cache);
    Tensor dw({4, 4}), dv({4});
    const Tensor dh = temporal_attention_backward(cache, w, v, wt, dw, dv);
    const auto loss = [&](const Tensor& hh, const Tensor& ww, const Tensor& vv) {
      return weighted_sum(temporal_attention_forward(hh, ww, vv).first, wt);
    };
    track(max_rel_error(dw, finite_diff_grad([&](const Tensor& p) { return loss(h, p, v); }, w)));
    track(max_rel_error(dv, finite_diff_grad([&](const Tensor& p) { return loss(h, w, p); }, v)));
    track(max_rel_error(dh, finite_diff_grad([&](const Tensor& p) { return loss(p, w, v); }, h)));
  }
  {  // multi-head self-attention, T=4, d=6
    using speedest::layers::MhsaCache;
    using speedest::layers::MhsaGrads;
    using speedest::layers::MhsaParams;
    const std::int64_t d = 6;
    MhsaParams p{random_tensor({d, d}, rng), random_tensor({d, d}, rng),
                 random_tensor({d, d}, rng), random_tensor({d, d}, rng),
                 random_tensor({d}, rng),    random_tensor({d}, rng),
                 random_tensor({d}, rng),    random_tensor({d}, rng)};
    const Tensor x = random_tensor({4, d}, rng), wt = random_tensor({4, d}, rng);
    MhsaCache cache;
    mhsa_forward(x, p, 2, &cache);
    MhsaGrads g{Tensor({d, d}), Tensor({d, d}), Tensor({d, d}), Tensor({d, d}),
                Tensor({d}),    Tensor({d}),    Tensor({d}),    Tensor({d})};
    const Tensor dx = mhsa_backward(cache, p, 2, wt, g);
    const auto probe_member = [](MhsaParams& mp, int i) -> Tensor& {
      switch (i) {
        case 0: return mp.wq;
        case 1: return mp.wk;
        case 2: return mp.wv;
        case 3: return mp.wo;
        case 4: return mp.bq;
        case 5: return mp.bk;
        case 6: return mp.bv;
        default: return mp.bo;
      }
    };
    const auto grad_member = [](MhsaGrads& mg, int i) -> Tensor& {
      switch (i) {
        case 0: return mg.wq;
        case 1: return mg.wk;
        case 2: return mg.wv;
        case 3: return mg.wo;
        case 4: return mg.bq;
        case 5: return mg.bk;
        case 6: return mg.bv;
        default: return mg.bo;
      }
    };
    for (int i = 0; i < 8; ++i) {
      MhsaParams origin = p;
      const Tensor fd = finite_diff_grad(
          [&](const Tensor& probe) {
            MhsaParams pp = p;
            probe_member(pp, i) = probe;
            return weighted_sum(mhsa_forward(x, pp, 2), wt);
          },
          probe_member(origin, i));
      track(max_rel_error(grad_member(g, i), fd));
    }
    track(max_rel_error(dx, finite_diff_grad([&](const Tensor& probe) {
      return weighted_sum(mhsa_forward(probe, p, 2), wt);
    }, x)));
  }
  return worst;
}

ModelConfig tiny_config(Variant v) {
  ModelConfig cfg = ModelConfig::defaults(v);
  cfg.input_dim = 4;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 6;
  cfg.n_heads = 2;
  cfg.d_ff = 8;
  cfg.seq_len = 4;
  cfg.dropout_p = (v == Variant::transformer) ? 0.1 : 0.0;
  return cfg;
}

/// Worst relative error of a whole-model gradient vs finite differences,
/// including the encoder-layer composite (checked per parameter tensor).
double model_gradient_sweep(Variant v, std::uint64_t seed) {
  Rng rng(seed);
  SpeedModel m = models::build(tiny_config(v), rng);
  m.target_stats.mean = 2.0;
  m.target_stats.std = 1.5;
  Rng in_rng(seed + 100);
  const Tensor batch = random_tensor({3, 4, 4}, in_rng);
  const Tensor targets = random_tensor({3}, in_rng, -3, 3);

  auto [preds, cache] = models::forward(m, batch, true, 77);
  auto [loss, dpred] = train::mse_loss(preds, targets);
  (void)loss;
  const ParamSet grads = models::backward(m, cache, dpred);

  double worst = 0.0;
  for (const auto& name : m.params.names()) {
    const Tensor fd = finite_diff_grad(
        [&](const Tensor& probe) {
          SpeedModel pm = m;
          pm.params.param(name) = probe;
          auto [p, c] = models::forward(pm, batch, true, 77);
          (void)c;
          return train::mse_loss(p, targets).first;
        },
        m.params.param(name));
    worst = std::max(worst, max_rel_error(grads.grad(name), fd));
  }
  return worst;
}

std::vector<dataio::Track> default_dataset() {
  synth::DatasetConfig cfg;  // 400 tracks, seed 42, U[30,105], 0.5 px noise
  return synth::generate_dataset(cfg);
}

struct SanityResult {
  std::string variant;
  double accuracy = 0.0;
  double rmse = 0.0;
  int epochs_run = 0;
};

SanityResult train_and_score(Variant v, const std::vector<dataio::Track>& train_tracks,
                             const std::vector<dataio::Track>& test_tracks,
                             const train::TrainConfig& tcfg, int seq_len = 0) {
  ModelConfig mcfg = ModelConfig::defaults(v);
  if (seq_len > 0) mcfg.seq_len = seq_len;
  Rng rng(tcfg.seed);
  auto result = train::train(models::build(mcfg, rng), train_tracks, tcfg);
  const auto m = metrics::evaluate(result.model, test_tracks);
  return SanityResult{models::variant_name(v), m.mean_accuracy_pct, m.rmse_kmh,
                      static_cast<int>(result.history.size())};
}

double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// --------------------------------------------------------------- criteria

Outcome criterion_gradient_suite() {
  Outcome o{"gradient-suite", false, false, ""};
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    worst = std::max(worst, layer_gradient_sweep(seed));
    for (Variant v : {Variant::rnn, Variant::lstm, Variant::gru, Variant::transformer}) {
      worst = std::max(worst, model_gradient_sweep(v, seed));
    }
  }
  const double secs = elapsed_s(start);
  o.pass = worst < 1e-4 && secs < 60.0;
  o.detail = "max rel err " + fmt(worst, 8) + ", " + fmt(secs, 1) + " s (< 60 s)";
  return o;
}

Outcome criterion_metrics_exactness() {
  Outcome o{"metrics-exactness", false, false, ""};
  bool ok = true;
  ok = ok && metrics::accuracy_pct(60.0, 60.0) == 100.0;
  ok = ok && metrics::accuracy_pct(95.0, 100.0) == 95.0;
  ok = ok && std::fabs(metrics::accuracy_pct(210.0, 100.0) - (-10.0)) < 1e-12;
  ok = ok && metrics::rmse({{60.0, 60.0}}) == 0.0;
  ok = ok && metrics::rmse({{3.0, 1.0}, {1.0, 3.0}}) == 2.0;
  ok = ok && metrics::rmse({{105.0, 100.0}}) == 5.0;

  // evaluate equals recomputation from its own emitted rows
  synth::DatasetConfig dcfg;
  dcfg.n_tracks = 12;
  dcfg.seed = 9;
  dcfg.proto.n_frames = 26;
  const auto tracks = synth::generate_dataset(dcfg);
  Rng noise(3);
  const auto m = metrics::evaluate_with(
      [&noise](const dataio::Track& t) { return *t.speed_kmh + noise.uniform(-6, 6); }, tracks);
  double acc = 0.0;
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : m.per_sample) {
    acc += metrics::accuracy_pct(r.predicted_kmh, r.actual_kmh);
    pairs.emplace_back(r.predicted_kmh, r.actual_kmh);
  }
  ok = ok && std::fabs(m.mean_accuracy_pct - acc / static_cast<double>(m.n)) < 1e-3;
  ok = ok && std::fabs(m.rmse_kmh - metrics::rmse(pairs)) < 1e-3;

  o.pass = ok;
  o.detail = "formula cases exact; evaluate/recompute delta < 1e-3";
  return o;
}

Outcome criterion_oracle_inversion() {
  Outcome o{"oracle-inversion", false, false, ""};
  Rng rng(1234);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    synth::CameraConfig cam;
    cam.image_w = 20000;  // keep fast far sweeps inside the frame
    cam.cx = 10000;
    cam.focal_px = rng.uniform(600, 3000);
    synth::ScenarioConfig scn;
    scn.kind = synth::ScenarioKind::lateral;
    scn.depth_m = rng.uniform(20, 120);
    scn.speed_kmh = rng.uniform(30, 105);
    scn.n_frames = 21 + static_cast<int>(rng.uniform_index(40));
    scn.noise_px_std = 0.0;
    scn.direction = rng.uniform() < 0.5 ? 1 : -1;
    scn.y_center_m = rng.uniform(-1.5, 1.5);
    const auto track = synth::generate_track(scn, cam, "oracle");
    worst = std::max(worst,
                     std::fabs(synth::oracle_speed_lateral(track, cam, scn.depth_m) - scn.speed_kmh));
  }
  o.pass = worst < 1e-9;
  o.detail = "worst |recovered - label| = " + fmt(worst, 12) + " km/h over 100 scenarios";
  return o;
}

Outcome criterion_learning_sanity() {
  Outcome o{"learning-sanity", false, false, ""};
  const auto start = std::chrono::steady_clock::now();

  const auto tracks = default_dataset();
  const auto split = dataio::split_dataset(tracks, 0.8, 42);
  train::TrainConfig tcfg;  // spec defaults
  tcfg.seed = 7;

  bool ok = true;
  std::string parts;
  for (Variant v : {Variant::rnn, Variant::lstm, Variant::gru, Variant::transformer}) {
    const auto r = train_and_score(v, split.train, split.test, tcfg);
    const double min_acc = (v == Variant::lstm) ? kMinAccuracyLstm : kMinAccuracyAll;
    const double max_rmse = (v == Variant::lstm) ? kMaxRmseLstm : kMaxRmseAll;
    const bool v_ok = r.accuracy >= min_acc && r.rmse <= max_rmse;
    ok = ok && v_ok;
    parts += r.variant + " acc " + fmt(r.accuracy, 2) + "% rmse " + fmt(r.rmse, 2) + " (" +
             std::to_string(r.epochs_run) + " ep)" + (v_ok ? "" : " [BELOW THRESHOLD]") + "; ";
  }
  const double secs = elapsed_s(start);
  ok = ok && secs < 900.0;
  o.pass = ok;
  o.detail = parts + fmt(secs, 0) + " s (< 900 s); thresholds all>=" + fmt(kMinAccuracyAll, 0) +
             "%/<=" + fmt(kMaxRmseAll, 0) + ", lstm>=" + fmt(kMinAccuracyLstm, 0) + "%/<=" +
             fmt(kMaxRmseLstm, 0);
  return o;
}

Outcome criterion_gating_claim() {
  Outcome o{"gating-claim", false, true, ""};
  // approach-heavy mix stresses the nonlinear scale-change dynamics
  double rnn_rmse[3], lstm_rmse[3], gru_rmse[3];
  int idx = 0;
  for (std::uint64_t seed : {201, 202, 203}) {
    synth::DatasetConfig dcfg;
    dcfg.n_tracks = 160;
    dcfg.seed = seed;
    dcfg.lateral_fraction = 0.2;
    const auto tracks = synth::generate_dataset(dcfg);
    const auto split = dataio::split_dataset(tracks, 0.8, seed);
    train::TrainConfig tcfg;
    tcfg.seed = seed;
    tcfg.epochs = 30;
    tcfg.early_stop_patience = 8;
    rnn_rmse[idx] = train_and_score(Variant::rnn, split.train, split.test, tcfg).rmse;
    lstm_rmse[idx] = train_and_score(Variant::lstm, split.train, split.test, tcfg).rmse;
    gru_rmse[idx] = train_and_score(Variant::gru, split.train, split.test, tcfg).rmse;
    ++idx;
  }
  const double rnn_med = median3(rnn_rmse[0], rnn_rmse[1], rnn_rmse[2]);
  const double lstm_med = median3(lstm_rmse[0], lstm_rmse[1], lstm_rmse[2]);
  const double gru_med = median3(gru_rmse[0], gru_rmse[1], gru_rmse[2]);
  o.pass = lstm_med <= rnn_med && gru_med <= rnn_med;
  o.detail = "median rmse over 3 seeds: rnn " + fmt(rnn_med, 2) + ", lstm " + fmt(lstm_med, 2) +
             ", gru " + fmt(gru_med, 2) + (o.pass ? "" : " — soft criterion, investigate");
  return o;
}

Outcome criterion_seq_len_claim() {
  Outcome o{"seq-len-claim", false, false, ""};
  synth::DatasetConfig dcfg;
  dcfg.n_tracks = 200;
  dcfg.seed = 77;
  const auto tracks = synth::generate_dataset(dcfg);
  const auto split = dataio::split_dataset(tracks, 0.8, 77);

  train::TrainConfig tcfg;  // equal epoch budget, no early stop
  tcfg.seed = 5;
  tcfg.epochs = 15;
  tcfg.early_stop_patience = 1000;

  const auto short_run = train_and_score(Variant::lstm, split.train, split.test, tcfg, 5);
  const auto long_run = train_and_score(Variant::lstm, split.train, split.test, tcfg, 30);
  o.pass = long_run.rmse <= short_run.rmse;
  o.detail = "lstm test rmse: seq_len 30 -> " + fmt(long_run.rmse, 2) + " km/h vs seq_len 5 -> " +
             fmt(short_run.rmse, 2) + " km/h";
  return o;
}

Outcome criterion_pe_property() {
  Outcome o{"positional-encoding", false, false, ""};
  ModelConfig cfg = tiny_config(Variant::transformer);
  cfg.seq_len = 6;
  cfg.dropout_p = 0.0;

  Rng in_rng(31);
  const Tensor batch = random_tensor({1, 6, 4}, in_rng);
  Tensor reversed({1, 6, 4});
  for (std::int64_t t = 0; t < 6; ++t) {
    for (std::int64_t j = 0; j < 4; ++j) reversed(0, t, j) = batch(0, 5 - t, j);
  }
  // neutralize the (intrinsically order-sensitive) conv embedding so the A/B
  // attributes order sensitivity to the positional encoding alone
  const auto pointwise = [](SpeedModel& m) {
    Tensor& w = m.params.param("conv_in.w");
    for (std::int64_t ci = 0; ci < w.dim(1); ++ci) {
      for (std::int64_t co = 0; co < w.dim(2); ++co) w(0, ci, co) = w(2, ci, co) = 0.0;
    }
  };

  cfg.use_positional_encoding = false;
  Rng rng_a(8);
  SpeedModel plain = models::build(cfg, rng_a);
  pointwise(plain);
  const double d_off = std::fabs(models::forward(plain, batch, false).first(0) -
                                 models::forward(plain, reversed, false).first(0));

  cfg.use_positional_encoding = true;
  Rng rng_b(8);
  SpeedModel positional = models::build(cfg, rng_b);
  pointwise(positional);
  const double d_on = std::fabs(models::forward(positional, batch, false).first(0) -
                                models::forward(positional, reversed, false).first(0));

  o.pass = d_off < 1e-9 && d_on > 1e-3;
  o.detail = "|delta| with PE zeroed " + fmt(d_off, 12) + " (< 1e-9), with PE " + fmt(d_on, 6) +
             " (> 1e-3)";
  return o;
}

Outcome criterion_determinism_persistence() {
  Outcome o{"determinism-persistence", false, false, ""};
  const auto dir = scratch_dir();

  // byte-identical dataset files for the same seed
  synth::DatasetConfig dcfg;
  dcfg.n_tracks = 60;
  dcfg.seed = 4242;
  const auto a_path = dir / "det_a.jsonl";
  const auto b_path = dir / "det_b.jsonl";
  dataio::save_tracks(synth::generate_dataset(dcfg), a_path);
  dataio::save_tracks(synth::generate_dataset(dcfg), b_path);
  std::ifstream fa(a_path), fb(b_path);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  const bool bytes_equal = sa.str() == sb.str() && !sa.str().empty();

  // identical training histories for the same seed
  const auto tracks = synth::generate_dataset(dcfg);
  train::TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.seed = 11;
  ModelConfig mcfg = ModelConfig::defaults(Variant::gru);
  mcfg.embed_dim = 8;
  mcfg.hidden_dim = 12;
  Rng r1(tcfg.seed), r2(tcfg.seed);
  const auto run1 = train::train(models::build(mcfg, r1), tracks, tcfg);
  const auto run2 = train::train(models::build(mcfg, r2), tracks, tcfg);
  bool history_equal = run1.history.size() == run2.history.size();
  for (std::size_t i = 0; history_equal && i < run1.history.size(); ++i) {
    history_equal = run1.history[i].train_loss == run2.history[i].train_loss &&
                    run1.history[i].val_rmse == run2.history[i].val_rmse;
  }

  // checkpoint round-trip: predictions bit-exact
  const auto ckpt_path = dir / "det.ckpt.json";
  train::save_checkpoint(run1.model, tcfg, 3, run1.best_val_rmse, ckpt_path);
  const auto loaded = train::load_checkpoint(ckpt_path);
  bool preds_equal = true;
  for (int i = 0; i < 10; ++i) {
    const auto pa = models::predict_track(run1.model, tracks[static_cast<std::size_t>(i)]);
    const auto pb = models::predict_track(loaded.model, tracks[static_cast<std::size_t>(i)]);
    preds_equal = preds_equal && pa.speed_kmh == pb.speed_kmh &&
                  pa.per_window == pb.per_window;
  }

  o.pass = bytes_equal && history_equal && preds_equal;
  o.detail = std::string("dataset bytes ") + (bytes_equal ? "identical" : "DIFFER") +
             "; histories " + (history_equal ? "identical" : "DIFFER") + "; checkpoint preds " +
             (preds_equal ? "bit-exact" : "DIFFER");
  return o;
}

Outcome criterion_external_harness() {
  Outcome o{"external-data-harness", false, false, ""};
  const auto dir = scratch_dir();
  const char* external = std::getenv("SPEEDEST_VS13_DATA");

  fs::path data_path;
  std::string source;
  if (external && *external) {
    data_path = external;
    source = "user-supplied dataset";
  } else {
    // synthetic stand-in proves the harness end to end
    synth::DatasetConfig dcfg;
    dcfg.n_tracks = 24;
    dcfg.seed = 99;
    data_path = dir / "harness_data.jsonl";
    dataio::save_tracks(synth::generate_dataset(dcfg), data_path);
    source = "synthetic stand-in (set SPEEDEST_VS13_DATA to use converted data)";
  }

  // short CLI-level train + eval; no numeric threshold is asserted
  const auto model_cfg = dir / "harness_model.json";
  const auto train_cfg = dir / "harness_train.json";
  {
    std::ofstream mc(model_cfg);
    mc << R"({"variant": "lstm", "embed_dim": 16, "hidden_dim": 24})";
    std::ofstream tc(train_cfg);
    tc << R"({"epochs": 4, "seed": 2})";
  }
  const auto ckpt = dir / "harness.ckpt.json";
  const auto report_dir = dir / "harness_report";
  std::ostringstream out, err;
  int code = cli::run({"train", "--data", data_path.string(), "--model-config",
                       model_cfg.string(), "--train-config", train_cfg.string(), "--out",
                       ckpt.string()},
                      out, err);
  if (code == 0) {
    code = cli::run({"eval", "--checkpoint", ckpt.string(), "--data", data_path.string(),
                     "--report-dir", report_dir.string()},
                    out, err);
  }
  std::string header;
  if (code == 0) {
    std::ifstream summary(report_dir / "summary.csv");
    std::getline(summary, header);
  }
  o.pass = code == 0 && header == "model,dataset,mean_accuracy_pct,rmse_kmh,n";
  o.detail = source + (o.pass ? "; report written" : "; FAILED: " + err.str());
  return o;
}

}  // namespace

int main() {
  std::vector<std::function<Outcome()>> criteria = {
      criterion_gradient_suite,     criterion_metrics_exactness, criterion_oracle_inversion,
      criterion_learning_sanity,    criterion_gating_claim,      criterion_seq_len_claim,
      criterion_pe_property,        criterion_determinism_persistence,
      criterion_external_harness,
  };

  bool any_hard_failure = false;
  for (auto& criterion : criteria) {
    Outcome o;
    try {
      o = criterion();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const char* tag = o.pass ? "PASS" : (o.soft ? "FAIL (soft)" : "FAIL");
    std::printf("[%s] %s: %s\n", tag, o.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !o.soft) any_hard_failure = true;
  }
  return any_hard_failure ? 1 : 0;
}
