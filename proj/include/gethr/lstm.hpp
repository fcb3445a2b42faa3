#ifndef GETHR_LSTM_HPP
#define GETHR_LSTM_HPP

// LSTM cell without peepholes. Gates are packed row-wise in the order
// [input, forget, candidate, output], so w_x is (4H x D), w_h is (4H x H)
// and b is (4H x 1).
//
//   a    = w_x x_t + w_h h_{t-1} + b
//   i    = sigmoid(a[0:H])        f = sigmoid(a[H:2H])
//   g    = tanh(a[2H:3H])         o = sigmoid(a[3H:4H])
//   c_t  = f * c_{t-1} + i * g
//   h_t  = o * tanh(c_t)
//
// State starts at h_0 = c_0 = 0. Backward is exact reverse-mode over the
// same graph, accumulating into the .grad buffers of the parameters.
//
// A simple (non-gated) recurrent cell is included for reference:
//   h_t = theta(w_hx x_t + w_hh h_{t-1} + b_h)

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"
#include "gethr/numerics.hpp"
#include "gethr/rng.hpp"

namespace gethr {

struct RnnParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  ParamTensor w_hx;  // H x D
  ParamTensor w_hh;  // H x H
  ParamTensor b_h;   // H x 1
};

inline RnnParams make_rnn_params(std::size_t input, std::size_t hidden, SeededRng& rng,
                                 const std::string& prefix = "rnn") {
  if (input == 0 || hidden == 0) throw value_error("make_rnn_params: zero size");
  RnnParams p;
  p.input_size = input;
  p.hidden_size = hidden;
  p.w_hx = init_params(prefix + ".w_hx", hidden, input, InitScheme::uniform_008, rng);
  p.w_hh = init_params(prefix + ".w_hh", hidden, hidden, InitScheme::uniform_008, rng);
  p.b_h = init_params(prefix + ".b_h", hidden, 1, InitScheme::zeros, rng);
  return p;
}

inline Vec simple_rnn_cell(const Vec& x, const Vec& h_prev, const RnnParams& p,
                           Activation theta = Activation::tanh) {
  if (x.size() != p.input_size || h_prev.size() != p.hidden_size) {
    throw shape_error("simple_rnn_cell: input/state size mismatch");
  }
  Vec a = matvec(p.w_hx.value, x);
  Vec ah = matvec(p.w_hh.value, h_prev);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += ah[i] + p.b_h.value(i, 0);
  return elementwise_activation(theta, a);
}

struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  ParamTensor w_x;  // 4H x D, rows [i, f, g, o]
  ParamTensor w_h;  // 4H x H
  ParamTensor b;    // 4H x 1, forget rows start at 1.0

  void zero_grads() {
    w_x.zero_grad();
    w_h.zero_grad();
    b.zero_grad();
  }
};

inline LstmParams make_lstm_params(std::size_t input, std::size_t hidden, SeededRng& rng,
                                   const std::string& prefix = "lstm") {
  if (input == 0 || hidden == 0) throw value_error("make_lstm_params: zero size");
  LstmParams p;
  p.input_size = input;
  p.hidden_size = hidden;
  p.w_x = init_params(prefix + ".w_x", 4 * hidden, input, InitScheme::uniform_008, rng);
  p.w_h = init_params(prefix + ".w_h", 4 * hidden, hidden, InitScheme::uniform_008, rng);
  p.b = init_params(prefix + ".b", 4 * hidden, 1, InitScheme::forget_bias_one, rng);
  return p;
}

// Everything the backward pass needs about one time step.
struct LstmStep {
  Vec x, h_prev, c_prev;
  Vec gate_i, gate_f, cand, gate_o;
  Vec cell, tanh_cell, hidden;
};

inline LstmStep lstm_cell_forward(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                                  const LstmParams& p) {
  std::size_t h = p.hidden_size;
  if (x.size() != p.input_size) {
    throw shape_error("lstm_cell_forward: input size " + std::to_string(x.size()) +
                      " != " + std::to_string(p.input_size));
  }
  if (h_prev.size() != h || c_prev.size() != h) {
    throw shape_error("lstm_cell_forward: state size mismatch");
  }
  Vec a = matvec(p.w_x.value, x);
  Vec ah = matvec(p.w_h.value, h_prev);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += ah[i] + p.b.value(i, 0);

  LstmStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.gate_i.resize(h);
  s.gate_f.resize(h);
  s.cand.resize(h);
  s.gate_o.resize(h);
  s.cell.resize(h);
  s.tanh_cell.resize(h);
  s.hidden.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    s.gate_i[k] = sigmoid(a[k]);
    s.gate_f[k] = sigmoid(a[h + k]);
    s.cand[k] = std::tanh(a[2 * h + k]);
    s.gate_o[k] = sigmoid(a[3 * h + k]);
    s.cell[k] = s.gate_f[k] * c_prev[k] + s.gate_i[k] * s.cand[k];
    s.tanh_cell[k] = std::tanh(s.cell[k]);
    s.hidden[k] = s.gate_o[k] * s.tanh_cell[k];
  }
  return s;
}

struct LstmCellGrads {
  Vec dx, dh_prev, dc_prev;
};

// dh/dc are gradients w.r.t. this step's h_t and c_t. Parameter gradients
// accumulate into p.*.grad; the caller zeroes them between uses.
inline LstmCellGrads lstm_cell_backward(const LstmStep& s, const Vec& dh, const Vec& dc,
                                        LstmParams& p) {
  std::size_t h = p.hidden_size;
  if (s.hidden.size() != h || s.x.size() != p.input_size) {
    throw shape_error("lstm_cell_backward: cache does not match params");
  }
  if (dh.size() != h || dc.size() != h) throw shape_error("lstm_cell_backward: grad size");

  Vec da(4 * h);  // gradients at the pre-activations, same packing as forward
  Vec dc_total(h);
  for (std::size_t k = 0; k < h; ++k) {
    double do_ = dh[k] * s.tanh_cell[k];
    dc_total[k] = dc[k] + dh[k] * s.gate_o[k] * (1.0 - s.tanh_cell[k] * s.tanh_cell[k]);
    double di = dc_total[k] * s.cand[k];
    double df = dc_total[k] * s.c_prev[k];
    double dg = dc_total[k] * s.gate_i[k];
    da[k] = di * s.gate_i[k] * (1.0 - s.gate_i[k]);
    da[h + k] = df * s.gate_f[k] * (1.0 - s.gate_f[k]);
    da[2 * h + k] = dg * (1.0 - s.cand[k] * s.cand[k]);
    da[3 * h + k] = do_ * s.gate_o[k] * (1.0 - s.gate_o[k]);
  }

  outer_acc(p.w_x.grad, da, s.x);
  outer_acc(p.w_h.grad, da, s.h_prev);
  for (std::size_t i = 0; i < 4 * h; ++i) p.b.grad(i, 0) += da[i];

  LstmCellGrads g;
  g.dx.assign(p.input_size, 0.0);
  g.dh_prev.assign(h, 0.0);
  g.dc_prev.resize(h);
  matvec_t_acc(p.w_x.value, da, g.dx);
  matvec_t_acc(p.w_h.value, da, g.dh_prev);
  for (std::size_t k = 0; k < h; ++k) g.dc_prev[k] = dc_total[k] * s.gate_f[k];
  return g;
}

// Per-sequence cache: one LstmStep per time step plus the dropout mask that
// was applied to the exposed outputs (empty when none was).
struct LstmCache {
  std::vector<LstmStep> steps;
  Matrix mask;  // T x H or empty

  std::size_t length() const { return steps.size(); }
};

// Runs the cell over a T x D sequence. Returns the T x H output that later
// layers see: raw hidden states, times `mask` if one is given. The mask only
// scales what leaves the layer; the h->h and c->c recurrences always use the
// raw states.
inline Matrix lstm_sequence_forward(const Matrix& seq, const LstmParams& p, LstmCache& cache,
                                    const Matrix* mask = nullptr) {
  if (seq.rows == 0) throw value_error("lstm_sequence_forward: empty sequence");
  if (seq.cols != p.input_size) {
    throw shape_error("lstm_sequence_forward: feature dim " + std::to_string(seq.cols) +
                      " != " + std::to_string(p.input_size));
  }
  std::size_t h = p.hidden_size;
  if (mask != nullptr) require_shape(*mask, seq.rows, h, "lstm_sequence_forward mask");

  cache.steps.clear();
  cache.steps.reserve(seq.rows);
  cache.mask = mask != nullptr ? *mask : Matrix();

  Vec h_prev(h, 0.0), c_prev(h, 0.0);
  Matrix out(seq.rows, h);
  for (std::size_t t = 0; t < seq.rows; ++t) {
    LstmStep s = lstm_cell_forward(seq.row(t), h_prev, c_prev, p);
    h_prev = s.hidden;
    c_prev = s.cell;
    for (std::size_t k = 0; k < h; ++k) {
      out(t, k) = mask != nullptr ? s.hidden[k] * (*mask)(t, k) : s.hidden[k];
    }
    cache.steps.push_back(std::move(s));
  }
  return out;
}

// d_out is the gradient w.r.t. the exposed (masked) outputs. Returns the
// gradient w.r.t. the input sequence; parameter gradients accumulate.
inline Matrix lstm_sequence_backward(const LstmCache& cache, const Matrix& d_out, LstmParams& p) {
  std::size_t tl = cache.length();
  std::size_t h = p.hidden_size;
  if (tl == 0) throw value_error("lstm_sequence_backward: empty cache");
  if (cache.steps[0].hidden.size() != h || cache.steps[0].x.size() != p.input_size) {
    throw shape_error("lstm_sequence_backward: cache does not match params");
  }
  require_shape(d_out, tl, h, "lstm_sequence_backward d_out");
  if (!cache.mask.empty()) require_shape(cache.mask, tl, h, "lstm_sequence_backward mask");

  Matrix d_seq(tl, p.input_size);
  Vec dh(h, 0.0), dc(h, 0.0);
  for (std::size_t t = tl; t-- > 0;) {
    for (std::size_t k = 0; k < h; ++k) {
      double g = d_out(t, k);
      if (!cache.mask.empty()) g *= cache.mask(t, k);
      dh[k] += g;
    }
    LstmCellGrads g = lstm_cell_backward(cache.steps[t], dh, dc, p);
    d_seq.set_row(t, g.dx);
    dh = std::move(g.dh_prev);
    dc = std::move(g.dc_prev);
  }
  return d_seq;
}

}  // namespace gethr

#endif
