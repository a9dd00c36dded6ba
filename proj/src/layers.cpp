// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/layers.hpp"

#include <cmath>

#include "speedest/common.hpp"

namespace speedest::layers {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw NumericError(msg);
}

/// ds = alpha * (dalpha - dot(alpha, dalpha)) for one softmax vector.
void softmax_backward_row(const double* alpha, const double* dalpha, double* ds, std::int64_t n) {
  double dot = 0.0;
  for (std::int64_t i = 0; i < n; ++i) dot += alpha[i] * dalpha[i];
  for (std::int64_t i = 0; i < n; ++i) ds[i] = alpha[i] * (dalpha[i] - dot);
}

}  // namespace

// ----------------------------------------------------------------------- conv

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Conv1dCache* cache) {
  require(x.rank() == 2 && w.rank() == 3 && w.dim(0) == 3, "conv1d: bad ranks");
  require(w.dim(1) == x.cols() && b.numel() == w.dim(2), "conv1d: shape mismatch");
  const std::int64_t t_len = x.rows(), c_in = x.cols(), c_out = w.dim(2);
  Tensor y({t_len, c_out});
  for (std::int64_t t = 0; t < t_len; ++t) {
    double* yrow = y.row_ptr(t);
    for (std::int64_t co = 0; co < c_out; ++co) yrow[co] = b(co);
    for (std::int64_t k = -1; k <= 1; ++k) {
      const std::int64_t src = t + k;
      if (src < 0 || src >= t_len) continue;
      const double* xrow = x.row_ptr(src);
      for (std::int64_t ci = 0; ci < c_in; ++ci) {
        const double xv = xrow[ci];
        const double* wrow = &w(k + 1, ci, 0);
        for (std::int64_t co = 0; co < c_out; ++co) yrow[co] += xv * wrow[co];
      }
    }
  }
  if (cache) cache->x = x;
  return y;
}

Tensor conv1d_backward(const Conv1dCache& cache, const Tensor& w, const Tensor& dy, Tensor& dw,
                       Tensor& db) {
  const Tensor& x = cache.x;
  const std::int64_t t_len = x.rows(), c_in = x.cols(), c_out = w.dim(2);
  require(dy.rows() == t_len && dy.cols() == c_out, "conv1d_backward: dy shape mismatch");
  Tensor dx({t_len, c_in});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* dyrow = dy.row_ptr(t);
    for (std::int64_t co = 0; co < c_out; ++co) db(co) += dyrow[co];
    for (std::int64_t k = -1; k <= 1; ++k) {
      const std::int64_t src = t + k;
      if (src < 0 || src >= t_len) continue;
      const double* xrow = x.row_ptr(src);
      double* dxrow = dx.row_ptr(src);
      for (std::int64_t ci = 0; ci < c_in; ++ci) {
        const double xv = xrow[ci];
        const double* wrow = &w(k + 1, ci, 0);
        double* dwrow = &dw(k + 1, ci, 0);
        double acc = 0.0;
        for (std::int64_t co = 0; co < c_out; ++co) {
          dwrow[co] += xv * dyrow[co];
          acc += wrow[co] * dyrow[co];
        }
        dxrow[ci] += acc;
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------- dense

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, DenseCache* cache) {
  require(x.rank() == 2 && w.rank() == 2, "dense: rank-2 tensors required");
  require(x.cols() == w.rows() && b.numel() == w.cols(), "dense: shape mismatch");
  Tensor y = matmul(x, w);
  for (std::int64_t i = 0; i < y.rows(); ++i) {
    double* row = y.row_ptr(i);
    for (std::int64_t j = 0; j < y.cols(); ++j) row[j] += b(j);
  }
  if (cache) cache->x = x;
  return y;
}

Tensor dense_backward(const DenseCache& cache, const Tensor& w, const Tensor& dy, Tensor& dw,
                      Tensor& db) {
  require(dy.rank() == 2 && dy.cols() == w.cols(), "dense_backward: dy shape mismatch");
  const Tensor dw_local = matmul_tn(cache.x, dy);
  for (std::int64_t i = 0; i < dw.numel(); ++i) dw(i) += dw_local(i);
  for (std::int64_t t = 0; t < dy.rows(); ++t) {
    const double* row = dy.row_ptr(t);
    for (std::int64_t j = 0; j < dy.cols(); ++j) db(j) += row[j];
  }
  return matmul_nt(dy, w);
}

// ------------------------------------------------------------ recurrent cells

Tensor rnn_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& w,
                        const Tensor& b) {
  const std::int64_t c = x_t.numel(), h = h_prev.numel();
  require(w.rank() == 2 && w.rows() == c + h && w.cols() == h && b.numel() == h,
          "rnn_cell: shape mismatch");
  Tensor h_t({h});
  for (std::int64_t j = 0; j < h; ++j) {
    double acc = b(j);
    for (std::int64_t i = 0; i < c; ++i) acc += x_t(i) * w(i, j);
    for (std::int64_t k = 0; k < h; ++k) acc += h_prev(k) * w(c + k, j);
    h_t(j) = std::tanh(acc);
  }
  return h_t;
}

std::pair<Tensor, Tensor> lstm_cell_forward(const Tensor& x_t, const Tensor& h_prev,
                                            const Tensor& c_prev, const Tensor& w,
                                            const Tensor& b) {
  const std::int64_t c = x_t.numel(), h = h_prev.numel();
  require(w.rank() == 2 && w.rows() == c + h && w.cols() == 4 * h && b.numel() == 4 * h &&
              c_prev.numel() == h,
          "lstm_cell: shape mismatch");
  Tensor h_t({h}), c_t({h});
  std::vector<double> a(static_cast<std::size_t>(4 * h));
  for (std::int64_t m = 0; m < 4 * h; ++m) {
    double acc = b(m);
    for (std::int64_t i = 0; i < c; ++i) acc += x_t(i) * w(i, m);
    for (std::int64_t k = 0; k < h; ++k) acc += h_prev(k) * w(c + k, m);
    a[static_cast<std::size_t>(m)] = acc;
  }
  for (std::int64_t j = 0; j < h; ++j) {
    const double gi = sigmoid_scalar(a[static_cast<std::size_t>(j)]);
    const double gf = sigmoid_scalar(a[static_cast<std::size_t>(h + j)]);
    const double gg = std::tanh(a[static_cast<std::size_t>(2 * h + j)]);
    const double go = sigmoid_scalar(a[static_cast<std::size_t>(3 * h + j)]);
    c_t(j) = gf * c_prev(j) + gi * gg;
    h_t(j) = go * std::tanh(c_t(j));
  }
  return {h_t, c_t};
}

Tensor gru_cell_forward(const Tensor& x_t, const Tensor& h_prev, const Tensor& w_zr,
                        const Tensor& b_zr, const Tensor& w_xn, const Tensor& w_hn,
                        const Tensor& b_n) {
  const std::int64_t c = x_t.numel(), h = h_prev.numel();
  require(w_zr.rank() == 2 && w_zr.rows() == c + h && w_zr.cols() == 2 * h &&
              b_zr.numel() == 2 * h && w_xn.rows() == c && w_xn.cols() == h &&
              w_hn.rows() == h && w_hn.cols() == h && b_n.numel() == h,
          "gru_cell: shape mismatch");
  Tensor h_t({h});
  std::vector<double> azr(static_cast<std::size_t>(2 * h));
  for (std::int64_t m = 0; m < 2 * h; ++m) {
    double acc = b_zr(m);
    for (std::int64_t i = 0; i < c; ++i) acc += x_t(i) * w_zr(i, m);
    for (std::int64_t k = 0; k < h; ++k) acc += h_prev(k) * w_zr(c + k, m);
    azr[static_cast<std::size_t>(m)] = acc;
  }
  for (std::int64_t j = 0; j < h; ++j) {
    const double z = sigmoid_scalar(azr[static_cast<std::size_t>(j)]);
    const double r = sigmoid_scalar(azr[static_cast<std::size_t>(h + j)]);
    double hn = 0.0;
    for (std::int64_t k = 0; k < h; ++k) hn += h_prev(k) * w_hn(k, j);
    double an = b_n(j) + r * hn;
    for (std::int64_t i = 0; i < c; ++i) an += x_t(i) * w_xn(i, j);
    const double n = std::tanh(an);
    h_t(j) = (1.0 - z) * n + z * h_prev(j);
  }
  return h_t;
}

// --------------------------------------------------------- sequence unrolling

Tensor rnn_forward(const Tensor& x, const Tensor& w, const Tensor& b, RnnSeqCache* cache) {
  const std::int64_t t_len = x.rows(), c = x.cols(), h = w.cols();
  require(w.rows() == c + h && b.numel() == h, "rnn_forward: shape mismatch");
  Tensor h_all({t_len + 1, h});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* xrow = x.row_ptr(t);
    const double* hprev = h_all.row_ptr(t);
    double* hrow = h_all.row_ptr(t + 1);
    for (std::int64_t j = 0; j < h; ++j) {
      double acc = b(j);
      for (std::int64_t i = 0; i < c; ++i) acc += xrow[i] * w(i, j);
      for (std::int64_t k = 0; k < h; ++k) acc += hprev[k] * w(c + k, j);
      hrow[j] = std::tanh(acc);
    }
  }
  Tensor h_seq({t_len, h});
  std::copy(h_all.row_ptr(1), h_all.row_ptr(1) + t_len * h, h_seq.data());
  if (cache) {
    cache->x = x;
    cache->h_all = h_all;
  }
  return h_seq;
}

Tensor rnn_backward(const RnnSeqCache& cache, const Tensor& w, const Tensor& dh_seq, Tensor& dw,
                    Tensor& db) {
  const Tensor& x = cache.x;
  const std::int64_t t_len = x.rows(), c = x.cols(), h = w.cols();
  require(dh_seq.rows() == t_len && dh_seq.cols() == h, "rnn_backward: dh shape mismatch");
  Tensor dx({t_len, c});
  std::vector<double> dh_carry(static_cast<std::size_t>(h), 0.0);
  std::vector<double> dpre(static_cast<std::size_t>(h));
  for (std::int64_t t = t_len - 1; t >= 0; --t) {
    const double* hrow = cache.h_all.row_ptr(t + 1);
    const double* hprev = cache.h_all.row_ptr(t);
    const double* dhrow = dh_seq.row_ptr(t);
    const double* xrow = x.row_ptr(t);
    for (std::int64_t j = 0; j < h; ++j) {
      const double dh_tot = dhrow[j] + dh_carry[static_cast<std::size_t>(j)];
      dpre[static_cast<std::size_t>(j)] = dh_tot * (1.0 - hrow[j] * hrow[j]);
      db(j) += dpre[static_cast<std::size_t>(j)];
    }
    double* dxrow = dx.row_ptr(t);
    for (std::int64_t i = 0; i < c; ++i) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < h; ++j) {
        dw(i, j) += xrow[i] * dpre[static_cast<std::size_t>(j)];
        acc += w(i, j) * dpre[static_cast<std::size_t>(j)];
      }
      dxrow[i] = acc;
    }
    for (std::int64_t k = 0; k < h; ++k) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < h; ++j) {
        dw(c + k, j) += hprev[k] * dpre[static_cast<std::size_t>(j)];
        acc += w(c + k, j) * dpre[static_cast<std::size_t>(j)];
      }
      dh_carry[static_cast<std::size_t>(k)] = acc;
    }
  }
  return dx;
}

Tensor lstm_forward(const Tensor& x, const Tensor& w, const Tensor& b, LstmSeqCache* cache) {
  const std::int64_t t_len = x.rows(), c = x.cols(), h4 = w.cols(), h = h4 / 4;
  require(h4 == 4 * h && w.rows() == c + h && b.numel() == h4, "lstm_forward: shape mismatch");
  Tensor h_all({t_len + 1, h}), c_all({t_len + 1, h});
  Tensor gi({t_len, h}), gf({t_len, h}), gg({t_len, h}), go({t_len, h});
  std::vector<double> a(static_cast<std::size_t>(h4));
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* xrow = x.row_ptr(t);
    const double* hprev = h_all.row_ptr(t);
    const double* cprev = c_all.row_ptr(t);
    for (std::int64_t m = 0; m < h4; ++m) a[static_cast<std::size_t>(m)] = b(m);
    for (std::int64_t i = 0; i < c; ++i) {
      const double xv = xrow[i];
      const double* wrow = &w(i, 0);
      for (std::int64_t m = 0; m < h4; ++m) a[static_cast<std::size_t>(m)] += xv * wrow[m];
    }
    for (std::int64_t k = 0; k < h; ++k) {
      const double hv = hprev[k];
      const double* wrow = &w(c + k, 0);
      for (std::int64_t m = 0; m < h4; ++m) a[static_cast<std::size_t>(m)] += hv * wrow[m];
    }
    double* hrow = h_all.row_ptr(t + 1);
    double* crow = c_all.row_ptr(t + 1);
    for (std::int64_t j = 0; j < h; ++j) {
      const double i_g = sigmoid_scalar(a[static_cast<std::size_t>(j)]);
      const double f_g = sigmoid_scalar(a[static_cast<std::size_t>(h + j)]);
      const double g_g = std::tanh(a[static_cast<std::size_t>(2 * h + j)]);
      const double o_g = sigmoid_scalar(a[static_cast<std::size_t>(3 * h + j)]);
      gi(t, j) = i_g;
      gf(t, j) = f_g;
      gg(t, j) = g_g;
      go(t, j) = o_g;
      crow[j] = f_g * cprev[j] + i_g * g_g;
      hrow[j] = o_g * std::tanh(crow[j]);
    }
  }
  Tensor h_seq({t_len, h});
  std::copy(h_all.row_ptr(1), h_all.row_ptr(1) + t_len * h, h_seq.data());
  if (cache) {
    cache->x = x;
    cache->h_all = h_all;
    cache->c_all = c_all;
    cache->gate_i = gi;
    cache->gate_f = gf;
    cache->gate_g = gg;
    cache->gate_o = go;
  }
  return h_seq;
}

Tensor lstm_backward(const LstmSeqCache& cache, const Tensor& w, const Tensor& dh_seq, Tensor& dw,
                     Tensor& db) {
  const Tensor& x = cache.x;
  const std::int64_t t_len = x.rows(), c = x.cols(), h = cache.gate_i.cols();
  require(dh_seq.rows() == t_len && dh_seq.cols() == h, "lstm_backward: dh shape mismatch");
  Tensor dx({t_len, c});
  std::vector<double> dh_carry(static_cast<std::size_t>(h), 0.0);
  std::vector<double> dc_carry(static_cast<std::size_t>(h), 0.0);
  std::vector<double> da(static_cast<std::size_t>(4 * h));
  for (std::int64_t t = t_len - 1; t >= 0; --t) {
    const double* dhrow = dh_seq.row_ptr(t);
    const double* cprev = cache.c_all.row_ptr(t);
    const double* crow = cache.c_all.row_ptr(t + 1);
    const double* hprev = cache.h_all.row_ptr(t);
    const double* xrow = x.row_ptr(t);
    for (std::int64_t j = 0; j < h; ++j) {
      const double i_g = cache.gate_i(t, j);
      const double f_g = cache.gate_f(t, j);
      const double g_g = cache.gate_g(t, j);
      const double o_g = cache.gate_o(t, j);
      const double tc = std::tanh(crow[j]);
      const double dh = dhrow[j] + dh_carry[static_cast<std::size_t>(j)];
      const double d_o = dh * tc;
      const double dc = dc_carry[static_cast<std::size_t>(j)] + dh * o_g * (1.0 - tc * tc);
      const double d_i = dc * g_g;
      const double d_f = dc * cprev[j];
      const double d_g = dc * i_g;
      dc_carry[static_cast<std::size_t>(j)] = dc * f_g;
      da[static_cast<std::size_t>(j)] = d_i * i_g * (1.0 - i_g);
      da[static_cast<std::size_t>(h + j)] = d_f * f_g * (1.0 - f_g);
      da[static_cast<std::size_t>(2 * h + j)] = d_g * (1.0 - g_g * g_g);
      da[static_cast<std::size_t>(3 * h + j)] = d_o * o_g * (1.0 - o_g);
    }
    for (std::int64_t m = 0; m < 4 * h; ++m) db(m) += da[static_cast<std::size_t>(m)];
    double* dxrow = dx.row_ptr(t);
    for (std::int64_t i = 0; i < c; ++i) {
      const double xv = xrow[i];
      const double* wrow = &w(i, 0);
      double* dwrow = &dw(i, 0);
      double acc = 0.0;
      for (std::int64_t m = 0; m < 4 * h; ++m) {
        dwrow[m] += xv * da[static_cast<std::size_t>(m)];
        acc += wrow[m] * da[static_cast<std::size_t>(m)];
      }
      dxrow[i] = acc;
    }
    for (std::int64_t k = 0; k < h; ++k) {
      const double hv = hprev[k];
      const double* wrow = &w(c + k, 0);
      double* dwrow = &dw(c + k, 0);
      double acc = 0.0;
      for (std::int64_t m = 0; m < 4 * h; ++m) {
        dwrow[m] += hv * da[static_cast<std::size_t>(m)];
        acc += wrow[m] * da[static_cast<std::size_t>(m)];
      }
      dh_carry[static_cast<std::size_t>(k)] = acc;
    }
  }
  return dx;
}

Tensor gru_forward(const Tensor& x, const Tensor& w_zr, const Tensor& b_zr, const Tensor& w_xn,
                   const Tensor& w_hn, const Tensor& b_n, GruSeqCache* cache) {
  const std::int64_t t_len = x.rows(), c = x.cols(), h = w_xn.cols();
  require(w_zr.rows() == c + h && w_zr.cols() == 2 * h && b_zr.numel() == 2 * h &&
              w_xn.rows() == c && w_hn.rows() == h && w_hn.cols() == h && b_n.numel() == h,
          "gru_forward: shape mismatch");
  Tensor h_all({t_len + 1, h});
  Tensor gz({t_len, h}), gr({t_len, h}), gn({t_len, h}), hn_lin({t_len, h});
  std::vector<double> azr(static_cast<std::size_t>(2 * h));
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* xrow = x.row_ptr(t);
    const double* hprev = h_all.row_ptr(t);
    for (std::int64_t m = 0; m < 2 * h; ++m) azr[static_cast<std::size_t>(m)] = b_zr(m);
    for (std::int64_t i = 0; i < c; ++i) {
      const double xv = xrow[i];
      const double* wrow = &w_zr(i, 0);
      for (std::int64_t m = 0; m < 2 * h; ++m) azr[static_cast<std::size_t>(m)] += xv * wrow[m];
    }
    for (std::int64_t k = 0; k < h; ++k) {
      const double hv = hprev[k];
      const double* wrow = &w_zr(c + k, 0);
      for (std::int64_t m = 0; m < 2 * h; ++m) azr[static_cast<std::size_t>(m)] += hv * wrow[m];
    }
    double* hrow = h_all.row_ptr(t + 1);
    for (std::int64_t j = 0; j < h; ++j) {
      const double z = sigmoid_scalar(azr[static_cast<std::size_t>(j)]);
      const double r = sigmoid_scalar(azr[static_cast<std::size_t>(h + j)]);
      double hn = 0.0;
      for (std::int64_t k = 0; k < h; ++k) hn += hprev[k] * w_hn(k, j);
      double an = b_n(j) + r * hn;
      for (std::int64_t i = 0; i < c; ++i) an += xrow[i] * w_xn(i, j);
      const double n = std::tanh(an);
      gz(t, j) = z;
      gr(t, j) = r;
      gn(t, j) = n;
      hn_lin(t, j) = hn;
      hrow[j] = (1.0 - z) * n + z * hprev[j];
    }
  }
  Tensor h_seq({t_len, h});
  std::copy(h_all.row_ptr(1), h_all.row_ptr(1) + t_len * h, h_seq.data());
  if (cache) {
    cache->x = x;
    cache->h_all = h_all;
    cache->gate_z = gz;
    cache->gate_r = gr;
    cache->cand_n = gn;
    cache->hn_lin = hn_lin;
  }
  return h_seq;
}

Tensor gru_backward(const GruSeqCache& cache, const Tensor& w_zr, const Tensor& w_xn,
                    const Tensor& w_hn, const Tensor& dh_seq, Tensor& dw_zr, Tensor& db_zr,
                    Tensor& dw_xn, Tensor& dw_hn, Tensor& db_n) {
  const Tensor& x = cache.x;
  const std::int64_t t_len = x.rows(), c = x.cols(), h = w_xn.cols();
  require(dh_seq.rows() == t_len && dh_seq.cols() == h, "gru_backward: dh shape mismatch");
  Tensor dx({t_len, c});
  std::vector<double> dh_carry(static_cast<std::size_t>(h), 0.0);
  std::vector<double> dan(static_cast<std::size_t>(h));
  std::vector<double> dazr(static_cast<std::size_t>(2 * h));
  std::vector<double> dh_prev(static_cast<std::size_t>(h));
  for (std::int64_t t = t_len - 1; t >= 0; --t) {
    const double* dhrow = dh_seq.row_ptr(t);
    const double* hprev = cache.h_all.row_ptr(t);
    const double* xrow = x.row_ptr(t);
    for (std::int64_t j = 0; j < h; ++j) {
      const double z = cache.gate_z(t, j);
      const double r = cache.gate_r(t, j);
      const double n = cache.cand_n(t, j);
      const double hn = cache.hn_lin(t, j);
      const double dh = dhrow[j] + dh_carry[static_cast<std::size_t>(j)];
      const double dz = dh * (hprev[j] - n);
      const double dn = dh * (1.0 - z);
      dh_prev[static_cast<std::size_t>(j)] = dh * z;
      dan[static_cast<std::size_t>(j)] = dn * (1.0 - n * n);
      const double dr = dan[static_cast<std::size_t>(j)] * hn;
      dazr[static_cast<std::size_t>(j)] = dz * z * (1.0 - z);
      dazr[static_cast<std::size_t>(h + j)] = dr * r * (1.0 - r);
    }
    // candidate path
    double* dxrow = dx.row_ptr(t);
    for (std::int64_t j = 0; j < h; ++j) db_n(j) += dan[static_cast<std::size_t>(j)];
    for (std::int64_t i = 0; i < c; ++i) {
      const double xv = xrow[i];
      double acc = 0.0;
      for (std::int64_t j = 0; j < h; ++j) {
        dw_xn(i, j) += xv * dan[static_cast<std::size_t>(j)];
        acc += w_xn(i, j) * dan[static_cast<std::size_t>(j)];
      }
      dxrow[i] = acc;
    }
    for (std::int64_t k = 0; k < h; ++k) {
      const double hv = hprev[k];
      double acc = 0.0;
      for (std::int64_t j = 0; j < h; ++j) {
        const double dhn_j = dan[static_cast<std::size_t>(j)] * cache.gate_r(t, j);
        dw_hn(k, j) += hv * dhn_j;
        acc += w_hn(k, j) * dhn_j;
      }
      dh_prev[static_cast<std::size_t>(k)] += acc;
    }
    // gate path
    for (std::int64_t m = 0; m < 2 * h; ++m) db_zr(m) += dazr[static_cast<std::size_t>(m)];
    for (std::int64_t i = 0; i < c; ++i) {
      const double xv = xrow[i];
      const double* wrow = &w_zr(i, 0);
      double* dwrow = &dw_zr(i, 0);
      double acc = 0.0;
      for (std::int64_t m = 0; m < 2 * h; ++m) {
        dwrow[m] += xv * dazr[static_cast<std::size_t>(m)];
        acc += wrow[m] * dazr[static_cast<std::size_t>(m)];
      }
      dxrow[i] += acc;
    }
    for (std::int64_t k = 0; k < h; ++k) {
      const double hv = hprev[k];
      const double* wrow = &w_zr(c + k, 0);
      double* dwrow = &dw_zr(c + k, 0);
      double acc = 0.0;
      for (std::int64_t m = 0; m < 2 * h; ++m) {
        dwrow[m] += hv * dazr[static_cast<std::size_t>(m)];
        acc += wrow[m] * dazr[static_cast<std::size_t>(m)];
      }
      dh_prev[static_cast<std::size_t>(k)] += acc;
    }
    dh_carry = dh_prev;
  }
  return dx;
}

// ------------------------------------------------------------------ attention

std::pair<Tensor, Tensor> temporal_attention_forward(const Tensor& h, const Tensor& w,
                                                     const Tensor& v,
                                                     TemporalAttentionCache* cache) {
  const std::int64_t t_len = h.rows(), hd = h.cols();
  require(w.rows() == hd && w.cols() == hd && v.numel() == hd,
          "temporal_attention: shape mismatch");
  Tensor u = speedest::tanh(matmul(h, w));
  Tensor scores({t_len});
  for (std::int64_t t = 0; t < t_len; ++t) {
    double acc = 0.0;
    const double* urow = u.row_ptr(t);
    for (std::int64_t j = 0; j < hd; ++j) acc += urow[j] * v(j);
    scores(t) = acc;
  }
  Tensor alpha = softmax(scores);
  Tensor weighted({t_len, hd});
  const double scale = static_cast<double>(t_len);
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double a = scale * alpha(t);
    const double* hrow = h.row_ptr(t);
    double* wrow = weighted.row_ptr(t);
    for (std::int64_t j = 0; j < hd; ++j) wrow[j] = a * hrow[j];
  }
  if (cache) {
    cache->h = h;
    cache->u = u;
    cache->alpha = alpha;
  }
  return {weighted, alpha};
}

Tensor temporal_attention_backward(const TemporalAttentionCache& cache, const Tensor& w,
                                   const Tensor& v, const Tensor& dweighted, Tensor& dw,
                                   Tensor& dv) {
  const Tensor& h = cache.h;
  const std::int64_t t_len = h.rows(), hd = h.cols();
  require(dweighted.rows() == t_len && dweighted.cols() == hd,
          "temporal_attention_backward: shape mismatch");
  const double scale = static_cast<double>(t_len);

  Tensor dh({t_len, hd});
  Tensor dalpha({t_len});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* hrow = h.row_ptr(t);
    const double* dwt = dweighted.row_ptr(t);
    double* dhrow = dh.row_ptr(t);
    double acc = 0.0;
    const double a = scale * cache.alpha(t);
    for (std::int64_t j = 0; j < hd; ++j) {
      acc += dwt[j] * hrow[j];
      dhrow[j] = a * dwt[j];
    }
    dalpha(t) = scale * acc;
  }
  Tensor ds({t_len});
  softmax_backward_row(cache.alpha.data(), dalpha.data(), ds.data(), t_len);

  Tensor dpre({t_len, hd});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* urow = cache.u.row_ptr(t);
    double* dprerow = dpre.row_ptr(t);
    for (std::int64_t j = 0; j < hd; ++j) {
      dv(j) += ds(t) * urow[j];
      dprerow[j] = ds(t) * v(j) * (1.0 - urow[j] * urow[j]);
    }
  }
  const Tensor dw_local = matmul_tn(h, dpre);
  for (std::int64_t i = 0; i < dw.numel(); ++i) dw(i) += dw_local(i);
  const Tensor dh_score = matmul_nt(dpre, w);
  for (std::int64_t i = 0; i < dh.numel(); ++i) dh(i) += dh_score(i);
  return dh;
}

Tensor positional_encoding(std::int64_t t_len, std::int64_t d_model) {
  if (d_model % 2 != 0) throw ConfigError("positional_encoding: d_model must be even");
  Tensor pe({t_len, d_model});
  for (std::int64_t t = 0; t < t_len; ++t) {
    for (std::int64_t i = 0; i < d_model / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d_model));
      pe(t, 2 * i) = std::sin(static_cast<double>(t) * freq);
      pe(t, 2 * i + 1) = std::cos(static_cast<double>(t) * freq);
    }
  }
  return pe;
}

Tensor mhsa_forward(const Tensor& x, const MhsaParams& p, int n_heads, MhsaCache* cache) {
  const std::int64_t t_len = x.rows(), d = x.cols();
  require(n_heads >= 1 && d % n_heads == 0, "mhsa: d_model must be divisible by n_heads");
  const std::int64_t dh = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  DenseCache unused;
  Tensor q = dense_forward(x, p.wq, p.bq, &unused);
  Tensor k = dense_forward(x, p.wk, p.bk, &unused);
  Tensor v = dense_forward(x, p.wv, p.bv, &unused);

  Tensor attn({n_heads, t_len, t_len});
  Tensor concat({t_len, d});
  for (int head = 0; head < n_heads; ++head) {
    const std::int64_t off = head * dh;
    for (std::int64_t t = 0; t < t_len; ++t) {
      double* arow = &attn(head, t, 0);
      const double* qrow = q.row_ptr(t) + off;
      for (std::int64_t s = 0; s < t_len; ++s) {
        const double* krow = k.row_ptr(s) + off;
        double acc = 0.0;
        for (std::int64_t m = 0; m < dh; ++m) acc += qrow[m] * krow[m];
        arow[s] = acc * inv_sqrt;
      }
      // softmax with max subtraction
      double mx = arow[0];
      for (std::int64_t s = 1; s < t_len; ++s) mx = std::max(mx, arow[s]);
      double sum = 0.0;
      for (std::int64_t s = 0; s < t_len; ++s) {
        arow[s] = std::exp(arow[s] - mx);
        sum += arow[s];
      }
      for (std::int64_t s = 0; s < t_len; ++s) arow[s] /= sum;
      double* crow = concat.row_ptr(t) + off;
      for (std::int64_t m = 0; m < dh; ++m) crow[m] = 0.0;
      for (std::int64_t s = 0; s < t_len; ++s) {
        const double a = arow[s];
        const double* vrow = v.row_ptr(s) + off;
        for (std::int64_t m = 0; m < dh; ++m) crow[m] += a * vrow[m];
      }
    }
  }
  Tensor y = dense_forward(concat, p.wo, p.bo, &unused);
  if (cache) {
    cache->x = x;
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->attn = attn;
    cache->concat = concat;
  }
  return y;
}

Tensor mhsa_backward(const MhsaCache& cache, const MhsaParams& p, int n_heads, const Tensor& dy,
                     MhsaGrads& g) {
  const Tensor& x = cache.x;
  const std::int64_t t_len = x.rows(), d = x.cols();
  const std::int64_t dh = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  DenseCache out_cache;
  out_cache.x = cache.concat;
  Tensor dconcat = dense_backward(out_cache, p.wo, dy, g.wo, g.bo);

  Tensor dq({t_len, d}), dk({t_len, d}), dv({t_len, d});
  std::vector<double> dattn_row(static_cast<std::size_t>(t_len));
  std::vector<double> ds_row(static_cast<std::size_t>(t_len));
  for (int head = 0; head < n_heads; ++head) {
    const std::int64_t off = head * dh;
    for (std::int64_t t = 0; t < t_len; ++t) {
      const double* arow = &cache.attn(head, t, 0);
      const double* dcrow = dconcat.row_ptr(t) + off;
      for (std::int64_t s = 0; s < t_len; ++s) {
        const double* vrow = cache.v.row_ptr(s) + off;
        double acc = 0.0;
        for (std::int64_t m = 0; m < dh; ++m) acc += dcrow[m] * vrow[m];
        dattn_row[static_cast<std::size_t>(s)] = acc;
        double* dvrow = dv.row_ptr(s) + off;
        const double a = arow[s];
        for (std::int64_t m = 0; m < dh; ++m) dvrow[m] += a * dcrow[m];
      }
      softmax_backward_row(arow, dattn_row.data(), ds_row.data(), t_len);
      double* dqrow = dq.row_ptr(t) + off;
      const double* qrow = cache.q.row_ptr(t) + off;
      for (std::int64_t s = 0; s < t_len; ++s) {
        const double dsv = ds_row[static_cast<std::size_t>(s)] * inv_sqrt;
        const double* krow = cache.k.row_ptr(s) + off;
        double* dkrow = dk.row_ptr(s) + off;
        for (std::int64_t m = 0; m < dh; ++m) {
          dqrow[m] += dsv * krow[m];
          dkrow[m] += dsv * qrow[m];
        }
      }
    }
  }

  DenseCache in_cache;
  in_cache.x = x;
  Tensor dx = dense_backward(in_cache, p.wq, dq, g.wq, g.bq);
  const Tensor dxk = dense_backward(in_cache, p.wk, dk, g.wk, g.bk);
  const Tensor dxv = dense_backward(in_cache, p.wv, dv, g.wv, g.bv);
  for (std::int64_t i = 0; i < dx.numel(); ++i) dx(i) += dxk(i) + dxv(i);
  return dx;
}

// ----------------------------------------------------------------- layer norm

namespace {
constexpr double kLayerNormEps = 1e-12;
}

Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache* cache) {
  const std::int64_t t_len = x.rows(), d = x.cols();
  require(gain.numel() == d && bias.numel() == d, "layer_norm: shape mismatch");
  Tensor y({t_len, d});
  Tensor xhat({t_len, d});
  Tensor inv_std({t_len});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* xrow = x.row_ptr(t);
    double mean = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mean += xrow[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double dlt = xrow[j] - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std(t) = is;
    double* xh = xhat.row_ptr(t);
    double* yrow = y.row_ptr(t);
    for (std::int64_t j = 0; j < d; ++j) {
      xh[j] = (xrow[j] - mean) * is;
      yrow[j] = gain(j) * xh[j] + bias(j);
    }
  }
  if (cache) {
    cache->xhat = xhat;
    cache->inv_std = inv_std;
  }
  return y;
}

Tensor layer_norm_backward(const LayerNormCache& cache, const Tensor& gain, const Tensor& dy,
                           Tensor& dgain, Tensor& dbias) {
  const std::int64_t t_len = dy.rows(), d = dy.cols();
  Tensor dx({t_len, d});
  std::vector<double> dxhat(static_cast<std::size_t>(d));
  for (std::int64_t t = 0; t < t_len; ++t) {
    const double* dyrow = dy.row_ptr(t);
    const double* xh = cache.xhat.row_ptr(t);
    double m1 = 0.0, m2 = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      dgain(j) += dyrow[j] * xh[j];
      dbias(j) += dyrow[j];
      dxhat[static_cast<std::size_t>(j)] = dyrow[j] * gain(j);
      m1 += dxhat[static_cast<std::size_t>(j)];
      m2 += dxhat[static_cast<std::size_t>(j)] * xh[j];
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    const double is = cache.inv_std(t);
    double* dxrow = dx.row_ptr(t);
    for (std::int64_t j = 0; j < d; ++j) {
      dxrow[j] = is * (dxhat[static_cast<std::size_t>(j)] - m1 - xh[j] * m2);
    }
  }
  return dx;
}

// -------------------------------------------------------------- encoder layer

Tensor encoder_layer_forward(const Tensor& x, const EncoderLayerParams& p, int n_heads,
                             EncoderLayerCache* cache) {
  EncoderLayerCache local;
  EncoderLayerCache* c = cache ? cache : &local;

  const Tensor a = mhsa_forward(x, p.attn, n_heads, &c->attn);
  const Tensor r1 = add(x, a);
  const Tensor y = layer_norm_forward(r1, p.ln1_g, p.ln1_b, &c->ln1);

  c->ff_pre = dense_forward(y, p.ff1_w, p.ff1_b, &c->ff1);
  const Tensor hidden = relu(c->ff_pre);
  const Tensor f = dense_forward(hidden, p.ff2_w, p.ff2_b, &c->ff2);
  const Tensor r2 = add(y, f);
  return layer_norm_forward(r2, p.ln2_g, p.ln2_b, &c->ln2);
}

Tensor encoder_layer_backward(const EncoderLayerCache& cache, const EncoderLayerParams& p,
                              int n_heads, const Tensor& dout, EncoderLayerGrads& g) {
  const Tensor dr2 = layer_norm_backward(cache.ln2, p.ln2_g, dout, g.ln2_g, g.ln2_b);
  Tensor dhidden = dense_backward(cache.ff2, p.ff2_w, dr2, g.ff2_w, g.ff2_b);
  for (std::int64_t i = 0; i < dhidden.numel(); ++i) {
    if (cache.ff_pre(i) <= 0.0) dhidden(i) = 0.0;
  }
  Tensor dy = dense_backward(cache.ff1, p.ff1_w, dhidden, g.ff1_w, g.ff1_b);
  for (std::int64_t i = 0; i < dy.numel(); ++i) dy(i) += dr2(i);

  const Tensor dr1 = layer_norm_backward(cache.ln1, p.ln1_g, dy, g.ln1_g, g.ln1_b);
  Tensor dx = mhsa_backward(cache.attn, p.attn, n_heads, dr1, g.attn);
  for (std::int64_t i = 0; i < dx.numel(); ++i) dx(i) += dr1(i);
  return dx;
}

// -------------------------------------------------------------------- dropout

Tensor dropout_forward(const Tensor& x, double p, bool train_mode, Rng& rng,
                       DropoutCache* cache) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: p must be in [0,1)");
  if (!train_mode || p == 0.0) {
    if (cache) cache->mask = Tensor();
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double m = rng.uniform() < p ? 0.0 : keep_scale;
    mask(i) = m;
    y(i) = m * x(i);
  }
  if (cache) cache->mask = mask;
  return y;
}

Tensor dropout_backward(const DropoutCache& cache, const Tensor& dy) {
  if (cache.mask.numel() == 0) return dy;
  return mul(dy, cache.mask);
}

}  // namespace speedest::layers
