// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/models.hpp"

#include <cmath>
#include <exception>

#include "speedest/common.hpp"

namespace speedest::models {

namespace {

using layers::EncoderLayerCache;
using layers::EncoderLayerGrads;
using layers::EncoderLayerParams;
using layers::MhsaGrads;
using layers::MhsaParams;

std::string enc_prefix(int layer) { return "enc" + std::to_string(layer) + "."; }
std::string cell_prefix(const ModelConfig& cfg, int layer) {
  return variant_name(cfg.variant) + std::to_string(layer) + ".";
}

MhsaParams bind_mhsa(const ParamSet& ps, const std::string& prefix) {
  return MhsaParams{ps.param(prefix + "wq"), ps.param(prefix + "wk"), ps.param(prefix + "wv"),
                    ps.param(prefix + "wo"), ps.param(prefix + "bq"), ps.param(prefix + "bk"),
                    ps.param(prefix + "bv"), ps.param(prefix + "bo")};
}

EncoderLayerParams bind_encoder(const ParamSet& ps, int layer) {
  const std::string p = enc_prefix(layer);
  EncoderLayerParams out;
  out.attn = bind_mhsa(ps, p + "attn.");
  out.ln1_g = ps.param(p + "ln1.g");
  out.ln1_b = ps.param(p + "ln1.b");
  out.ff1_w = ps.param(p + "ff1.w");
  out.ff1_b = ps.param(p + "ff1.b");
  out.ff2_w = ps.param(p + "ff2.w");
  out.ff2_b = ps.param(p + "ff2.b");
  out.ln2_g = ps.param(p + "ln2.g");
  out.ln2_b = ps.param(p + "ln2.b");
  return out;
}

EncoderLayerGrads make_encoder_grads(const ModelConfig& cfg) {
  const std::int64_t d = cfg.embed_dim, dff = cfg.d_ff;
  EncoderLayerGrads g;
  g.attn = MhsaGrads{Tensor({d, d}), Tensor({d, d}), Tensor({d, d}), Tensor({d, d}),
                     Tensor({d}),    Tensor({d}),    Tensor({d}),    Tensor({d})};
  g.ln1_g = Tensor({d});
  g.ln1_b = Tensor({d});
  g.ff1_w = Tensor({d, dff});
  g.ff1_b = Tensor({dff});
  g.ff2_w = Tensor({dff, d});
  g.ff2_b = Tensor({d});
  g.ln2_g = Tensor({d});
  g.ln2_b = Tensor({d});
  return g;
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::int64_t i = 0; i < dst.numel(); ++i) dst(i) += src(i);
}

void merge_encoder_grads(ParamSet& grads, int layer, const EncoderLayerGrads& g) {
  const std::string p = enc_prefix(layer);
  add_into(grads.grad(p + "attn.wq"), g.attn.wq);
  add_into(grads.grad(p + "attn.wk"), g.attn.wk);
  add_into(grads.grad(p + "attn.wv"), g.attn.wv);
  add_into(grads.grad(p + "attn.wo"), g.attn.wo);
  add_into(grads.grad(p + "attn.bq"), g.attn.bq);
  add_into(grads.grad(p + "attn.bk"), g.attn.bk);
  add_into(grads.grad(p + "attn.bv"), g.attn.bv);
  add_into(grads.grad(p + "attn.bo"), g.attn.bo);
  add_into(grads.grad(p + "ln1.g"), g.ln1_g);
  add_into(grads.grad(p + "ln1.b"), g.ln1_b);
  add_into(grads.grad(p + "ff1.w"), g.ff1_w);
  add_into(grads.grad(p + "ff1.b"), g.ff1_b);
  add_into(grads.grad(p + "ff2.w"), g.ff2_w);
  add_into(grads.grad(p + "ff2.b"), g.ff2_b);
  add_into(grads.grad(p + "ln2.g"), g.ln2_g);
  add_into(grads.grad(p + "ln2.b"), g.ln2_b);
}

Tensor mean_pool_rows(const Tensor& x) {
  Tensor pooled({1, x.cols()});
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (std::int64_t t = 0; t < x.rows(); ++t) {
    const double* row = x.row_ptr(t);
    for (std::int64_t j = 0; j < x.cols(); ++j) pooled(0, j) += inv * row[j];
  }
  return pooled;
}

Tensor mean_pool_rows_backward(const Tensor& dpooled, std::int64_t t_len) {
  Tensor dx({t_len, dpooled.cols()});
  const double inv = 1.0 / static_cast<double>(t_len);
  for (std::int64_t t = 0; t < t_len; ++t) {
    double* row = dx.row_ptr(t);
    for (std::int64_t j = 0; j < dpooled.cols(); ++j) row[j] = inv * dpooled(0, j);
  }
  return dx;
}

double forward_sample_recurrent(const SpeedModel& m, const Tensor& x,
                                RecurrentSampleCache& c) {
  const ParamSet& ps = m.params;
  const ModelConfig& cfg = m.config;
  Tensor seq = layers::conv1d_forward(x, ps.param("conv_in.w"), ps.param("conv_in.b"), &c.conv_in);
  const int depth = cfg.n_layers;
  c.rnn.resize(cfg.variant == Variant::rnn ? depth : 0);
  c.lstm.resize(cfg.variant == Variant::lstm ? depth : 0);
  c.gru.resize(cfg.variant == Variant::gru ? depth : 0);
  for (int l = 0; l < depth; ++l) {
    const std::string p = cell_prefix(cfg, l);
    switch (cfg.variant) {
      case Variant::rnn:
        seq = layers::rnn_forward(seq, ps.param(p + "w"), ps.param(p + "b"), &c.rnn[l]);
        break;
      case Variant::lstm:
        seq = layers::lstm_forward(seq, ps.param(p + "w"), ps.param(p + "b"), &c.lstm[l]);
        break;
      case Variant::gru:
        seq = layers::gru_forward(seq, ps.param(p + "w_zr"), ps.param(p + "b_zr"),
                                  ps.param(p + "w_xn"), ps.param(p + "w_hn"), ps.param(p + "b_n"),
                                  &c.gru[l]);
        break;
      default:
        throw NumericError("recurrent forward on transformer config");
    }
  }
  auto [weighted, alpha] =
      layers::temporal_attention_forward(seq, ps.param("attn.w"), ps.param("attn.v"), &c.attn);
  (void)alpha;
  const Tensor conv_out =
      layers::conv1d_forward(weighted, ps.param("conv_out.w"), ps.param("conv_out.b"), &c.conv_out);
  const Tensor pooled = mean_pool_rows(conv_out);
  const Tensor y = layers::dense_forward(pooled, ps.param("head.w"), ps.param("head.b"), &c.head);
  return y(0, 0);
}

void backward_sample_recurrent(const SpeedModel& m, const RecurrentSampleCache& c, double dy_std,
                               ParamSet& g) {
  const ParamSet& ps = m.params;
  const ModelConfig& cfg = m.config;
  Tensor dy({1, 1});
  dy(0, 0) = dy_std;
  const Tensor dpooled =
      layers::dense_backward(c.head, ps.param("head.w"), dy, g.grad("head.w"), g.grad("head.b"));
  const std::int64_t t_len = c.conv_out.x.rows();
  const Tensor dconv_out = mean_pool_rows_backward(dpooled, t_len);
  const Tensor dweighted = layers::conv1d_backward(c.conv_out, ps.param("conv_out.w"), dconv_out,
                                                   g.grad("conv_out.w"), g.grad("conv_out.b"));
  Tensor dseq = layers::temporal_attention_backward(c.attn, ps.param("attn.w"), ps.param("attn.v"),
                                                    dweighted, g.grad("attn.w"), g.grad("attn.v"));
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const std::string p = cell_prefix(cfg, l);
    switch (cfg.variant) {
      case Variant::rnn:
        dseq = layers::rnn_backward(c.rnn[l], ps.param(p + "w"), dseq, g.grad(p + "w"),
                                    g.grad(p + "b"));
        break;
      case Variant::lstm:
        dseq = layers::lstm_backward(c.lstm[l], ps.param(p + "w"), dseq, g.grad(p + "w"),
                                     g.grad(p + "b"));
        break;
      case Variant::gru:
        dseq = layers::gru_backward(c.gru[l], ps.param(p + "w_zr"), ps.param(p + "w_xn"),
                                    ps.param(p + "w_hn"), dseq, g.grad(p + "w_zr"),
                                    g.grad(p + "b_zr"), g.grad(p + "w_xn"), g.grad(p + "w_hn"),
                                    g.grad(p + "b_n"));
        break;
      default:
        throw NumericError("recurrent backward on transformer config");
    }
  }
  layers::conv1d_backward(c.conv_in, ps.param("conv_in.w"), dseq, g.grad("conv_in.w"),
                          g.grad("conv_in.b"));
}

double forward_sample_transformer(const SpeedModel& m, const Tensor& x, bool train_mode,
                                  std::uint64_t sample_seed, const Tensor& pe,
                                  TransformerSampleCache& c) {
  const ParamSet& ps = m.params;
  const ModelConfig& cfg = m.config;
  Tensor z = layers::conv1d_forward(x, ps.param("conv_in.w"), ps.param("conv_in.b"), &c.conv_in);
  if (cfg.use_positional_encoding) z = add(z, pe);
  c.enc.resize(cfg.n_layers);
  for (int l = 0; l < cfg.n_layers; ++l) {
    z = layers::encoder_layer_forward(z, bind_encoder(ps, l), cfg.n_heads, &c.enc[l]);
  }
  const Tensor pooled = mean_pool_rows(z);
  c.fc1_pre = layers::dense_forward(pooled, ps.param("fc1.w"), ps.param("fc1.b"), &c.fc1);
  const Tensor hidden = relu(c.fc1_pre);
  Rng drop_rng(sample_seed);
  const Tensor dropped =
      layers::dropout_forward(hidden, cfg.dropout_p, train_mode, drop_rng, &c.drop);
  const Tensor y = layers::dense_forward(dropped, ps.param("head.w"), ps.param("head.b"), &c.head);
  return y(0, 0);
}

void backward_sample_transformer(const SpeedModel& m, const TransformerSampleCache& c,
                                 double dy_std, ParamSet& g) {
  const ParamSet& ps = m.params;
  const ModelConfig& cfg = m.config;
  Tensor dy({1, 1});
  dy(0, 0) = dy_std;
  Tensor ddropped =
      layers::dense_backward(c.head, ps.param("head.w"), dy, g.grad("head.w"), g.grad("head.b"));
  Tensor dhidden = layers::dropout_backward(c.drop, ddropped);
  for (std::int64_t i = 0; i < dhidden.numel(); ++i) {
    if (c.fc1_pre(i) <= 0.0) dhidden(i) = 0.0;
  }
  const Tensor dpooled =
      layers::dense_backward(c.fc1, ps.param("fc1.w"), dhidden, g.grad("fc1.w"), g.grad("fc1.b"));
  const std::int64_t t_len = m.config.seq_len;
  Tensor dz = mean_pool_rows_backward(dpooled, t_len);
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    EncoderLayerGrads eg = make_encoder_grads(cfg);
    dz = layers::encoder_layer_backward(c.enc[l], bind_encoder(ps, l), cfg.n_heads, dz, eg);
    merge_encoder_grads(g, l, eg);
  }
  layers::conv1d_backward(c.conv_in, ps.param("conv_in.w"), dz, g.grad("conv_in.w"),
                          g.grad("conv_in.b"));
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::rnn: return "rnn";
    case Variant::lstm: return "lstm";
    case Variant::gru: return "gru";
    case Variant::transformer: return "transformer";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "rnn") return Variant::rnn;
  if (name == "lstm") return Variant::lstm;
  if (name == "gru") return Variant::gru;
  if (name == "transformer") return Variant::transformer;
  throw ConfigError("unknown model variant '" + name + "' (valid: rnn, lstm, gru, transformer)");
}

ModelConfig ModelConfig::defaults(Variant v) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.n_layers = (v == Variant::transformer) ? 2 : 1;
  return cfg;
}

void ModelConfig::validate() const {
  if (input_dim < 1 || embed_dim < 1 || hidden_dim < 1 || n_layers < 1 || n_heads < 1 ||
      d_ff < 1 || seq_len < 1) {
    throw ConfigError("model config: all dimensions must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw ConfigError("model config: dropout_p must be in [0,1)");
  }
  if (variant == Variant::transformer && embed_dim % n_heads != 0) {
    throw ConfigError("model config: embed_dim (" + std::to_string(embed_dim) +
                      ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
}

void EncoderConfig::validate() const {
  if (d_model < 1 || n_heads < 1 || d_ff < 1 || n_layers < 1) {
    throw ConfigError("encoder config: all dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("encoder config: d_model must be divisible by n_heads");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw ConfigError("encoder config: dropout_p must be in [0,1)");
  }
}

EncoderConfig encoder_config(const ModelConfig& cfg) {
  EncoderConfig ec;
  ec.d_model = cfg.embed_dim;
  ec.n_heads = cfg.n_heads;
  ec.d_ff = cfg.d_ff;
  ec.n_layers = cfg.n_layers;
  ec.dropout_p = cfg.dropout_p;
  return ec;
}

SpeedModel build(const ModelConfig& config, Rng& rng) {
  config.validate();
  SpeedModel m;
  m.config = config;
  ParamSet& ps = m.params;
  const std::int64_t in = config.input_dim, e = config.embed_dim, h = config.hidden_dim;

  auto xavier = [&rng](std::vector<std::int64_t> shape) {
    return init_param(std::move(shape), InitScheme::xavier_uniform, rng);
  };
  auto zeros = [](std::vector<std::int64_t> shape) { return Tensor::zeros(std::move(shape)); };
  auto ones = [&rng](std::vector<std::int64_t> shape) {
    return init_param(std::move(shape), InitScheme::ones, rng);
  };

  if (config.variant == Variant::transformer) {
    const std::int64_t d = e, dff = config.d_ff;
    ps.add("conv_in.w", xavier({3, in, d}));
    ps.add("conv_in.b", zeros({d}));
    for (int l = 0; l < config.n_layers; ++l) {
      const std::string p = enc_prefix(l);
      for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) ps.add(p + w, xavier({d, d}));
      for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) ps.add(p + b, zeros({d}));
      ps.add(p + "ln1.g", ones({d}));
      ps.add(p + "ln1.b", zeros({d}));
      ps.add(p + "ff1.w", xavier({d, dff}));
      ps.add(p + "ff1.b", zeros({dff}));
      ps.add(p + "ff2.w", xavier({dff, d}));
      ps.add(p + "ff2.b", zeros({d}));
      ps.add(p + "ln2.g", ones({d}));
      ps.add(p + "ln2.b", zeros({d}));
    }
    ps.add("fc1.w", xavier({d, h}));
    ps.add("fc1.b", zeros({h}));
    ps.add("head.w", xavier({h, 1}));
    ps.add("head.b", zeros({1}));
  } else {
    ps.add("conv_in.w", xavier({3, in, e}));
    ps.add("conv_in.b", zeros({e}));
    for (int l = 0; l < config.n_layers; ++l) {
      const std::string p = cell_prefix(config, l);
      const std::int64_t cin = (l == 0) ? e : h;
      switch (config.variant) {
        case Variant::rnn:
          ps.add(p + "w", xavier({cin + h, h}));
          ps.add(p + "b", zeros({h}));
          break;
        case Variant::lstm:
          ps.add(p + "w", xavier({cin + h, 4 * h}));
          ps.add(p + "b", zeros({4 * h}));
          break;
        case Variant::gru:
          ps.add(p + "w_zr", xavier({cin + h, 2 * h}));
          ps.add(p + "b_zr", zeros({2 * h}));
          ps.add(p + "w_xn", xavier({cin, h}));
          ps.add(p + "w_hn", xavier({h, h}));
          ps.add(p + "b_n", zeros({h}));
          break;
        default:
          break;
      }
    }
    ps.add("attn.w", xavier({h, h}));
    ps.add("attn.v", xavier({h}));
    ps.add("conv_out.w", xavier({3, h, h}));
    ps.add("conv_out.b", zeros({h}));
    ps.add("head.w", xavier({h, 1}));
    ps.add("head.b", zeros({1}));
  }
  return m;
}

std::pair<Tensor, ForwardCache> forward(const SpeedModel& model, const Tensor& batch,
                                        bool train_mode, std::uint64_t dropout_seed) {
  const ModelConfig& cfg = model.config;
  if (batch.rank() != 3 || batch.dim(1) != cfg.seq_len || batch.dim(2) != cfg.input_dim) {
    throw NumericError("forward: batch must be [B x " + std::to_string(cfg.seq_len) + " x " +
                       std::to_string(cfg.input_dim) + "], got " + batch.shape_str());
  }
  const std::int64_t b_size = batch.dim(0);
  ForwardCache cache;
  cache.train_mode = train_mode;
  cache.batch_size = b_size;
  Tensor preds({b_size});

  const bool is_transformer = cfg.variant == Variant::transformer;
  Tensor pe;
  if (is_transformer) {
    cache.tr.resize(static_cast<std::size_t>(b_size));
    if (cfg.use_positional_encoding) pe = layers::positional_encoding(cfg.seq_len, cfg.embed_dim);
  } else {
    cache.rec.resize(static_cast<std::size_t>(b_size));
  }

  std::exception_ptr first_error;
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < b_size; ++b) {
    try {
      const Tensor x = batch.slab(b);
      double y_std = 0.0;
      if (is_transformer) {
        y_std = forward_sample_transformer(model, x, train_mode,
                                           mix_seed(dropout_seed, static_cast<std::uint64_t>(b)),
                                           pe, cache.tr[static_cast<std::size_t>(b)]);
      } else {
        y_std = forward_sample_recurrent(model, x, cache.rec[static_cast<std::size_t>(b)]);
      }
      preds(b) = y_std * model.target_stats.std + model.target_stats.mean;
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return {std::move(preds), std::move(cache)};
}

void backward(const SpeedModel& model, const ForwardCache& cache, const Tensor& grad_pred,
              ParamSet& grads) {
  if (!cache.train_mode) {
    throw NumericError("backward: cache was produced by an eval-mode forward");
  }
  const std::int64_t b_size = cache.batch_size;
  if (grad_pred.numel() != b_size) {
    throw NumericError("backward: grad_pred length does not match cached batch");
  }
  std::vector<ParamSet> sample_grads(static_cast<std::size_t>(b_size));
  std::exception_ptr first_error;
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < b_size; ++b) {
    try {
      ParamSet g = model.params.clone_shapes();
      const double dy_std = grad_pred(b) * model.target_stats.std;
      if (model.config.variant == Variant::transformer) {
        backward_sample_transformer(model, cache.tr[static_cast<std::size_t>(b)], dy_std, g);
      } else {
        backward_sample_recurrent(model, cache.rec[static_cast<std::size_t>(b)], dy_std, g);
      }
      sample_grads[static_cast<std::size_t>(b)] = std::move(g);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  // Fixed-order reduction keeps the result independent of the thread count.
  for (std::int64_t b = 0; b < b_size; ++b) {
    grads.accumulate_grads(sample_grads[static_cast<std::size_t>(b)]);
  }
}

ParamSet backward(const SpeedModel& model, const ForwardCache& cache, const Tensor& grad_pred) {
  ParamSet grads = model.params.clone_shapes();
  backward(model, cache, grad_pred, grads);
  return grads;
}

TrackPrediction predict_track(const SpeedModel& model, const dataio::Track& track) {
  const features::FeatureSequence seq = features::extract_features(track);
  const features::FeatureSequence norm = features::normalize(seq, model.norm_stats);
  const auto windows = features::window(norm, model.config.seq_len, 1);
  if (windows.empty()) {
    throw DataError("track '" + track.track_id + "' too short: " +
                    std::to_string(track.n_frames()) + " frames yield no window of length " +
                    std::to_string(model.config.seq_len));
  }
  const std::int64_t n = static_cast<std::int64_t>(windows.size());
  Tensor batch({n, model.config.seq_len, model.config.input_dim});
  for (std::int64_t i = 0; i < n; ++i) {
    const Tensor& v = windows[static_cast<std::size_t>(i)].values;
    std::copy(v.data(), v.data() + v.numel(), batch.data() + i * v.numel());
  }
  auto [preds, cache] = forward(model, batch, /*train_mode=*/false);
  (void)cache;
  TrackPrediction out;
  out.per_window.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    out.per_window[static_cast<std::size_t>(i)] = preds(i);
    sum += preds(i);
  }
  out.speed_kmh = sum / static_cast<double>(n);
  return out;
}

}  // namespace speedest::models
