// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <utility>
#include <vector>

#include "speedest/rng.hpp"
#include "speedest/tensor.hpp"

namespace speedest::layers {

// Every layer comes as a forward/backward pair. forward fills a cache with
// the activations backward needs; backward returns the gradient w.r.t. the
// layer input and accumulates parameter gradients into the tensors passed by
// reference (callers zero them beforehand).

// ---------------------------------------------------------------------- conv

/// Temporal convolution along T, kernel 3, stride 1, zero padding (same
/// length). w: [3 x C_in x C_out], tap k in {-1,0,1} reads x[t+k].
struct Conv1dCache {
  Tensor x;
};
Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      Conv1dCache* cache = nullptr);
Tensor conv1d_backward(const Conv1dCache& cache, const Tensor& w, const Tensor& dy, Tensor& dw,
                       Tensor& db);

// --------------------------------------------------------------------- dense

/// Affine map y = x w + b over the rows of x.
struct DenseCache {
  Tensor x;
};
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                     DenseCache* cache = nullptr);
Tensor dense_backward(const DenseCache& cache, const Tensor& w, const Tensor& dy, Tensor& dw,
                      Tensor& db);

// ----------------------------------------------------------- recurrent cells

// Cell parameters use one fused input-and-state weight matrix:
// rnn  w [(C+H) x H],  b [H]
// lstm w [(C+H) x 4H], b [4H], gate order i, f, g, o
// gru  w_zr [(C+H) x 2H], b_zr [2H] (z then r),
//      w_xn [C x H], w_hn [H x H], b_n [H]

/// h_t = tanh([x_t, h_prev] w + b)
Tensor rnn_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& w, const Tensor& b);

/// i,f,o = sigmoid gates, g = tanh candidate; c_t = f*c_prev + i*g;
/// h_t = o * tanh(c_t).
std::pair<Tensor, Tensor> lstm_cell_forward(const Tensor& x_t, const Tensor& h_prev,
                                            const Tensor& c_prev, const Tensor& w,
                                            const Tensor& b);

/// z,r = sigmoid gates; n = tanh(w_xn x + r*(w_hn h_prev) + b_n);
/// h_t = (1-z)*n + z*h_prev.
Tensor gru_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& w_zr,
                        const Tensor& b_zr, const Tensor& w_xn, const Tensor& w_hn,
                        const Tensor& b_n);

// Sequence runners unroll a cell over x [T x C] from zero initial state and
// keep everything BPTT needs.

struct RnnSeqCache {
  Tensor x;      // [T x C]
  Tensor h_all;  // [(T+1) x H], row 0 is h0 = 0
};
Tensor rnn_forward(const Tensor& x, const Tensor& w, const Tensor& b, RnnSeqCache* cache);
Tensor rnn_backward(const RnnSeqCache& cache, const Tensor& w, const Tensor& dh_seq, Tensor& dw,
                    Tensor& db);

struct LstmSeqCache {
  Tensor x;
  Tensor h_all;  // [(T+1) x H]
  Tensor c_all;  // [(T+1) x H]
  Tensor gate_i, gate_f, gate_g, gate_o;  // [T x H] each
};
Tensor lstm_forward(const Tensor& x, const Tensor& w, const Tensor& b, LstmSeqCache* cache);
Tensor lstm_backward(const LstmSeqCache& cache, const Tensor& w, const Tensor& dh_seq, Tensor& dw,
                     Tensor& db);

struct GruSeqCache {
  Tensor x;
  Tensor h_all;                  // [(T+1) x H]
  Tensor gate_z, gate_r, cand_n;  // [T x H]
  Tensor hn_lin;                 // [T x H], rows h_prev w_hn
};
Tensor gru_forward(const Tensor& x, const Tensor& w_zr, const Tensor& b_zr, const Tensor& w_xn,
                   const Tensor& w_hn, const Tensor& b_n, GruSeqCache* cache);
Tensor gru_backward(const GruSeqCache& cache, const Tensor& w_zr, const Tensor& w_xn,
                    const Tensor& w_hn, const Tensor& dh_seq, Tensor& dw_zr, Tensor& db_zr,
                    Tensor& dw_xn, Tensor& dw_hn, Tensor& db_n);

// ----------------------------------------------------------------- attention

/// Additive temporal attention over a state sequence h [T x H]:
/// score_t = v . tanh(w h_t), alpha = softmax(scores),
/// weighted[t] = T * alpha_t * h_t.
/// The T* scaling keeps uniform attention equal to the identity, so the
/// re-weighted sequence can feed a further convolution.
struct TemporalAttentionCache {
  Tensor h;       // [T x H]
  Tensor u;       // [T x H], tanh(w h_t)
  Tensor alpha;   // [T]
};
std::pair<Tensor, Tensor> temporal_attention_forward(const Tensor& h, const Tensor& w,
                                                     const Tensor& v,
                                                     TemporalAttentionCache* cache = nullptr);
Tensor temporal_attention_backward(const TemporalAttentionCache& cache, const Tensor& w,
                                   const Tensor& v, const Tensor& dweighted, Tensor& dw,
                                   Tensor& dv);

/// Sinusoidal positional encoding, [T x d_model], d_model even:
/// pe[t, 2i] = sin(t / 10000^(2i/d)), pe[t, 2i+1] = cos(t / 10000^(2i/d)).
Tensor positional_encoding(std::int64_t t_len, std::int64_t d_model);

/// Scaled dot-product multi-head self-attention, no mask (every position
/// attends to all positions). Projections carry biases; heads are
/// concatenated and output-projected.
struct MhsaParams {
  Tensor wq, wk, wv, wo;  // [d x d]
  Tensor bq, bk, bv, bo;  // [d]
};
struct MhsaGrads {
  Tensor wq, wk, wv, wo;
  Tensor bq, bk, bv, bo;
};
struct MhsaCache {
  Tensor x;           // [T x d]
  Tensor q, k, v;     // [T x d]
  Tensor attn;        // [heads x T x T], softmaxed rows
  Tensor concat;      // [T x d], heads concatenated
};
Tensor mhsa_forward(const Tensor& x, const MhsaParams& p, int n_heads,
                    MhsaCache* cache = nullptr);
Tensor mhsa_backward(const MhsaCache& cache, const MhsaParams& p, int n_heads, const Tensor& dy,
                     MhsaGrads& g);

// ---------------------------------------------------------------- layer norm

/// Row-wise normalization to zero mean / unit variance (population), then
/// gain and bias. eps = 1e-12.
struct LayerNormCache {
  Tensor xhat;     // [T x d]
  Tensor inv_std;  // [T]
};
Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache* cache = nullptr);
Tensor layer_norm_backward(const LayerNormCache& cache, const Tensor& gain, const Tensor& dy,
                           Tensor& dgain, Tensor& dbias);

// ------------------------------------------------------------- encoder layer

struct EncoderLayerParams {
  MhsaParams attn;
  Tensor ln1_g, ln1_b;
  Tensor ff1_w, ff1_b;  // [d x d_ff], [d_ff]
  Tensor ff2_w, ff2_b;  // [d_ff x d], [d]
  Tensor ln2_g, ln2_b;
};
struct EncoderLayerGrads {
  MhsaGrads attn;
  Tensor ln1_g, ln1_b;
  Tensor ff1_w, ff1_b;
  Tensor ff2_w, ff2_b;
  Tensor ln2_g, ln2_b;
};
struct EncoderLayerCache {
  MhsaCache attn;
  LayerNormCache ln1, ln2;
  DenseCache ff1, ff2;
  Tensor ff_pre;  // [T x d_ff] pre-ReLU
};

/// Post-norm residual encoder layer:
/// y = LayerNorm(x + MHSA(x)); out = LayerNorm(y + FFN(y)),
/// FFN = dense(d_ff) -> relu -> dense(d).
Tensor encoder_layer_forward(const Tensor& x, const EncoderLayerParams& p, int n_heads,
                             EncoderLayerCache* cache = nullptr);
Tensor encoder_layer_backward(const EncoderLayerCache& cache, const EncoderLayerParams& p,
                              int n_heads, const Tensor& dout, EncoderLayerGrads& g);

// ------------------------------------------------------------------- dropout

/// Inverted dropout: in train mode each element is zeroed with probability p
/// and survivors are scaled by 1/(1-p); in eval mode the op is exactly the
/// identity.
struct DropoutCache {
  Tensor mask;  // scale already folded in; empty in eval mode
};
Tensor dropout_forward(const Tensor& x, double p, bool train_mode, Rng& rng,
                       DropoutCache* cache = nullptr);
Tensor dropout_backward(const DropoutCache& cache, const Tensor& dy);

}  // namespace speedest::layers
