#ifndef GETHR_MODEL_HPP
#define GETHR_MODEL_HPP

// Sequence classifiers over multimodal input.
//
// The main model ("hybrid") is a three-stage network:
//   stage 1: one LSTM per modality over that modality's frames
//   stage 2: p_t = sigmoid(W_z z_t + b_z), z_t = concat of stage-1 hiddens
//   stage 3: one LSTM over p_1..p_T, per-step logits W_o h_t + b_o,
//            pooled (last or mean) and pushed through softmax
//
// Baselines share the pieces: "early" concatenates raw frames before a
// single projection+LSTM, "etoe" pools each per-modality LSTM and classifies
// the concatenation, "temporal:<mod>" is a single-modality LSTM classifier,
// and "nontemporal:<mod>" scores every frame with a linear-softmax head and
// averages the frame distributions.
//
// Dropout (inverted scaling) applies only to LSTM outputs as seen by later
// layers, never inside the recurrence.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gethr/errors.hpp"
#include "gethr/lstm.hpp"
#include "gethr/matrix.hpp"
#include "gethr/numerics.hpp"
#include "gethr/rng.hpp"

namespace gethr {

// Version tag shared by all JSON artifacts (datasets, models, ensembles,
// prediction dumps).
inline constexpr const char* kFormatVersion = "gethr-v1";

struct ModalitySpec {
  std::string name;
  std::size_t dim = 0;
};

struct MultimodalSequence {
  std::string id;
  std::size_t label = 0;
  std::map<std::string, Matrix> features;  // modality name -> T x D_m

  std::size_t length() const { return features.empty() ? 0 : features.begin()->second.rows; }

  const Matrix& feature(const std::string& name) const {
    auto it = features.find(name);
    if (it == features.end()) {
      throw value_error("sequence " + id + ": missing modality '" + name + "'");
    }
    return it->second;
  }
};

// Checks one sequence against the declared modalities: every modality
// present with the right width, all with the same non-zero length.
inline void validate_sequence(const MultimodalSequence& seq,
                              const std::vector<ModalitySpec>& specs) {
  std::size_t len = 0;
  for (const auto& spec : specs) {
    const Matrix& f = seq.feature(spec.name);
    if (f.cols != spec.dim) {
      throw shape_error("sequence " + seq.id + ": modality '" + spec.name + "' has dim " +
                        std::to_string(f.cols) + ", expected " + std::to_string(spec.dim));
    }
    if (f.rows == 0) throw shape_error("sequence " + seq.id + ": empty modality '" + spec.name + "'");
    if (len == 0) len = f.rows;
    if (f.rows != len) {
      throw shape_error("sequence " + seq.id + ": modality lengths disagree (" +
                        std::to_string(f.rows) + " vs " + std::to_string(len) + ")");
    }
  }
}

enum class Pooling { last, mean };

inline std::string to_string(Pooling p) { return p == Pooling::last ? "last" : "mean"; }

inline Pooling parse_pooling(const std::string& s) {
  if (s == "last") return Pooling::last;
  if (s == "mean") return Pooling::mean;
  throw value_error("unknown pooling '" + s + "' (expected last|mean)");
}

inline Vec pool_outputs(const Matrix& per_step, Pooling pool) {
  if (per_step.rows == 0) throw value_error("pool_outputs: empty input");
  if (pool == Pooling::last) return per_step.row(per_step.rows - 1);
  Vec out(per_step.cols, 0.0);
  for (std::size_t t = 0; t < per_step.rows; ++t)
    for (std::size_t k = 0; k < per_step.cols; ++k) out[k] += per_step(t, k);
  for (double& v : out) v /= static_cast<double>(per_step.rows);
  return out;
}

inline Matrix unpool_gradient(const Vec& dpool, std::size_t len, Pooling pool) {
  Matrix d(len, dpool.size(), 0.0);
  if (pool == Pooling::last) {
    d.set_row(len - 1, dpool);
  } else {
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t k = 0; k < dpool.size(); ++k)
        d(t, k) = dpool[k] / static_cast<double>(len);
  }
  return d;
}

// How a forward pass should behave. Training mode with a non-zero dropout
// rate draws masks from `rng`; eval mode never touches it.
struct ForwardMode {
  bool train = false;
  double dropout_rate = 0.0;
  SeededRng* rng = nullptr;

  static ForwardMode eval() { return {}; }
  static ForwardMode training(double rate, SeededRng* r) { return {true, rate, r}; }

  bool wants_mask() const { return train && dropout_rate > 0.0; }

  void validate() const {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
      throw value_error("dropout rate must be in [0, 1)");
    }
    if (wants_mask() && rng == nullptr) {
      throw value_error("training with dropout requires an rng");
    }
  }
};

// Inverted dropout: each entry is 0 with probability `rate`, else 1/(1-rate),
// so the expected value of a masked activation equals the raw one.
inline Vec dropout_mask(std::size_t size, double rate, SeededRng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw value_error("dropout rate must be in [0, 1)");
  Vec m(size);
  double keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < size; ++i) m[i] = rng.uniform01() < rate ? 0.0 : keep;
  return m;
}

// T x H mask, drawn row by row (step order).
inline Matrix dropout_mask_matrix(std::size_t rows, std::size_t cols, double rate,
                                  SeededRng& rng) {
  Matrix m(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) m.set_row(t, dropout_mask(cols, rate, rng));
  return m;
}

// y_t = W x_t + b for every row of X.
inline Matrix linear_rows(const Matrix& x, const ParamTensor& w, const ParamTensor& b) {
  Matrix out(x.rows, w.value.rows);
  for (std::size_t t = 0; t < x.rows; ++t) {
    Vec y = matvec(w.value, x.row(t));
    for (std::size_t k = 0; k < y.size(); ++k) out(t, k) = y[k] + b.value(k, 0);
  }
  return out;
}

// Per-modality layer sizes plus the two shared widths of the hybrid stack.
struct SizesConfig {
  std::map<std::string, std::size_t> hidden;  // modality -> LSTM width
  std::size_t default_hidden = 16;
  std::size_t fusion = 16;    // width of the sigmoid projection p_t
  std::size_t combined = 16;  // width of the combined / early-fusion LSTM

  std::size_t hidden_for(const std::string& name) const {
    auto it = hidden.find(name);
    return it == hidden.end() ? default_hidden : it->second;
  }
};

namespace detail {

inline std::size_t concat_dim(const std::vector<ModalitySpec>& specs) {
  std::size_t d = 0;
  for (const auto& s : specs) d += s.dim;
  return d;
}

inline void require_classes(const std::vector<std::string>& classes) {
  if (classes.size() < 2) throw value_error("need at least two classes");
}

// Modality indices sorted by name. Layers that consume a concatenation of
// per-modality blocks accumulate them in this order, so the floating-point
// result does not depend on the declared modality order.
inline std::vector<std::size_t> name_sorted_order(const std::vector<ModalitySpec>& specs) {
  std::vector<std::size_t> order(specs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return specs[a].name < specs[b].name; });
  return order;
}

// out = b + sum over blocks (visited in `order`) of W[:, block] x[block].
// Together with name_sorted_order this makes permuting the modalities, with
// W's column blocks permuted the same way, a bitwise no-op on the output.
inline Vec blocked_affine(const ParamTensor& w, const ParamTensor& b, const Vec& x,
                          const std::vector<std::pair<std::size_t, std::size_t>>& blocks,
                          const std::vector<std::size_t>& order) {
  Vec out(w.value.rows);
  for (std::size_t i = 0; i < w.value.rows; ++i) {
    double acc = b.value(i, 0);
    for (std::size_t m : order) {
      const auto& [off, size] = blocks[m];
      for (std::size_t j = 0; j < size; ++j) acc += w.value(i, off + j) * x[off + j];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// hybrid

struct HybridModel {
  std::vector<ModalitySpec> modalities;
  std::vector<std::string> classes;
  Pooling pooling = Pooling::last;
  std::vector<LstmParams> branches;  // one per modality, same order
  ParamTensor w_z, b_z;              // fusion projection
  LstmParams combined;
  ParamTensor w_o, b_o;              // per-step output head

  struct Cache {
    std::vector<LstmCache> branch;
    std::vector<Matrix> branch_out;  // exposed T x H_m
    Matrix z;                        // T x sum(H_m)
    Matrix p;                        // T x P, post-sigmoid
    LstmCache comb;
    Matrix comb_out;  // exposed T x Hc
    ScoreVector probs;
  };

  static constexpr const char* kind_name = "hybrid";
  std::string kind() const { return kind_name; }

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (auto& br : branches) {
      out.push_back(&br.w_x);
      out.push_back(&br.w_h);
      out.push_back(&br.b);
    }
    out.push_back(&w_z);
    out.push_back(&b_z);
    out.push_back(&combined.w_x);
    out.push_back(&combined.w_h);
    out.push_back(&combined.b);
    out.push_back(&w_o);
    out.push_back(&b_o);
    return out;
  }

  ScoreVector forward(const MultimodalSequence& seq, const ForwardMode& mode, Cache& cache) const {
    mode.validate();
    validate_sequence(seq, modalities);
    std::size_t len = seq.feature(modalities[0].name).rows;

    // Masks are drawn in a fixed order: per-branch (modality order), then
    // the combined LSTM, each mask row by row.
    cache.branch.assign(modalities.size(), LstmCache{});
    cache.branch_out.assign(modalities.size(), Matrix{});
    std::size_t zdim = 0;
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      const LstmParams& br = branches[m];
      Matrix mask;
      if (mode.wants_mask()) {
        mask = dropout_mask_matrix(len, br.hidden_size, mode.dropout_rate, *mode.rng);
      }
      cache.branch_out[m] = lstm_sequence_forward(seq.feature(modalities[m].name), br,
                                                  cache.branch[m],
                                                  mask.empty() ? nullptr : &mask);
      zdim += br.hidden_size;
    }

    cache.z = Matrix(len, zdim);
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t off = 0;
      for (std::size_t m = 0; m < modalities.size(); ++m) {
        for (std::size_t k = 0; k < branches[m].hidden_size; ++k) {
          cache.z(t, off + k) = cache.branch_out[m](t, k);
        }
        off += branches[m].hidden_size;
      }
    }

    std::vector<std::pair<std::size_t, std::size_t>> zblocks;
    for (std::size_t m = 0, off = 0; m < branches.size(); ++m) {
      zblocks.emplace_back(off, branches[m].hidden_size);
      off += branches[m].hidden_size;
    }
    std::vector<std::size_t> order = detail::name_sorted_order(modalities);
    Matrix pre(len, w_z.value.rows);
    for (std::size_t t = 0; t < len; ++t) {
      pre.set_row(t, detail::blocked_affine(w_z, b_z, cache.z.row(t), zblocks, order));
    }
    cache.p = elementwise_activation(Activation::sigmoid, pre);

    Matrix comb_mask;
    if (mode.wants_mask()) {
      comb_mask = dropout_mask_matrix(len, combined.hidden_size, mode.dropout_rate, *mode.rng);
    }
    cache.comb_out = lstm_sequence_forward(cache.p, combined, cache.comb,
                                           comb_mask.empty() ? nullptr : &comb_mask);

    Matrix logits = linear_rows(cache.comb_out, w_o, b_o);
    cache.probs = softmax(pool_outputs(logits, pooling));
    return cache.probs;
  }

  ScoreVector forward(const MultimodalSequence& seq) const {
    Cache cache;
    return forward(seq, ForwardMode::eval(), cache);
  }

  void backward(const Cache& cache, const Vec& dscores) {
    if (cache.comb.length() == 0) throw value_error("hybrid backward: stale cache");
    std::size_t len = cache.comb.length();
    Vec dpool = softmax_backward(cache.probs, dscores);
    Matrix dlogits = unpool_gradient(dpool, len, pooling);

    Matrix d_comb_out(len, combined.hidden_size, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      Vec dl = dlogits.row(t);
      outer_acc(w_o.grad, dl, cache.comb_out.row(t));
      for (std::size_t k = 0; k < dl.size(); ++k) b_o.grad(k, 0) += dl[k];
      Vec dh(combined.hidden_size, 0.0);
      matvec_t_acc(w_o.value, dl, dh);
      d_comb_out.set_row(t, dh);
    }

    Matrix dp = lstm_sequence_backward(cache.comb, d_comb_out, combined);

    Matrix dz(len, cache.z.cols, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      Vec dpre(cache.p.cols);
      for (std::size_t k = 0; k < cache.p.cols; ++k) {
        double pv = cache.p(t, k);
        dpre[k] = dp(t, k) * pv * (1.0 - pv);
      }
      outer_acc(w_z.grad, dpre, cache.z.row(t));
      for (std::size_t k = 0; k < dpre.size(); ++k) b_z.grad(k, 0) += dpre[k];
      Vec dzt(cache.z.cols, 0.0);
      matvec_t_acc(w_z.value, dpre, dzt);
      dz.set_row(t, dzt);
    }

    std::size_t off = 0;
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      std::size_t h = branches[m].hidden_size;
      Matrix dbr(len, h);
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t k = 0; k < h; ++k) dbr(t, k) = dz(t, off + k);
      lstm_sequence_backward(cache.branch[m], dbr, branches[m]);
      off += h;
    }
  }
};

// ---------------------------------------------------------------------------
// early fusion

struct EarlyFusionModel {
  std::vector<ModalitySpec> modalities;
  std::vector<std::string> classes;
  Pooling pooling = Pooling::last;
  ParamTensor w_in, b_in;  // projection of the concatenated frame
  LstmParams lstm;
  ParamTensor w_o, b_o;

  struct Cache {
    Matrix xcat;  // T x sum(D_m)
    Matrix q;     // T x P, post-sigmoid
    LstmCache lstm;
    Matrix exposed;
    ScoreVector probs;
  };

  static constexpr const char* kind_name = "early";
  std::string kind() const { return kind_name; }

  std::vector<ParamTensor*> params() {
    return {&w_in, &b_in, &lstm.w_x, &lstm.w_h, &lstm.b, &w_o, &b_o};
  }

  ScoreVector forward(const MultimodalSequence& seq, const ForwardMode& mode, Cache& cache) const {
    mode.validate();
    validate_sequence(seq, modalities);
    std::size_t len = seq.feature(modalities[0].name).rows;

    cache.xcat = Matrix(len, detail::concat_dim(modalities));
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t off = 0;
      for (const auto& spec : modalities) {
        const Matrix& f = seq.feature(spec.name);
        for (std::size_t d = 0; d < spec.dim; ++d) cache.xcat(t, off + d) = f(t, d);
        off += spec.dim;
      }
    }

    cache.q = elementwise_activation(Activation::sigmoid, linear_rows(cache.xcat, w_in, b_in));

    Matrix mask;
    if (mode.wants_mask()) {
      mask = dropout_mask_matrix(len, lstm.hidden_size, mode.dropout_rate, *mode.rng);
    }
    cache.exposed = lstm_sequence_forward(cache.q, lstm, cache.lstm,
                                          mask.empty() ? nullptr : &mask);
    Matrix logits = linear_rows(cache.exposed, w_o, b_o);
    cache.probs = softmax(pool_outputs(logits, pooling));
    return cache.probs;
  }

  ScoreVector forward(const MultimodalSequence& seq) const {
    Cache cache;
    return forward(seq, ForwardMode::eval(), cache);
  }

  void backward(const Cache& cache, const Vec& dscores) {
    if (cache.lstm.length() == 0) throw value_error("early backward: stale cache");
    std::size_t len = cache.lstm.length();
    Vec dpool = softmax_backward(cache.probs, dscores);
    Matrix dlogits = unpool_gradient(dpool, len, pooling);

    Matrix d_exposed(len, lstm.hidden_size, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      Vec dl = dlogits.row(t);
      outer_acc(w_o.grad, dl, cache.exposed.row(t));
      for (std::size_t k = 0; k < dl.size(); ++k) b_o.grad(k, 0) += dl[k];
      Vec dh(lstm.hidden_size, 0.0);
      matvec_t_acc(w_o.value, dl, dh);
      d_exposed.set_row(t, dh);
    }

    Matrix dq = lstm_sequence_backward(cache.lstm, d_exposed, lstm);
    for (std::size_t t = 0; t < len; ++t) {
      Vec dpre(cache.q.cols);
      for (std::size_t k = 0; k < cache.q.cols; ++k) {
        double qv = cache.q(t, k);
        dpre[k] = dq(t, k) * qv * (1.0 - qv);
      }
      outer_acc(w_in.grad, dpre, cache.xcat.row(t));
      for (std::size_t k = 0; k < dpre.size(); ++k) b_in.grad(k, 0) += dpre[k];
    }
  }
};

// ---------------------------------------------------------------------------
// temporal (single-modality LSTM)

struct TemporalModel {
  ModalitySpec modality;
  std::vector<std::string> classes;
  Pooling pooling = Pooling::last;
  LstmParams lstm;
  ParamTensor w_o, b_o;

  struct Cache {
    LstmCache lstm;
    Matrix exposed;
    ScoreVector probs;
  };

  std::string kind() const { return "temporal:" + modality.name; }

  std::vector<ParamTensor*> params() { return {&lstm.w_x, &lstm.w_h, &lstm.b, &w_o, &b_o}; }

  ScoreVector forward(const MultimodalSequence& seq, const ForwardMode& mode, Cache& cache) const {
    mode.validate();
    validate_sequence(seq, {modality});
    const Matrix& f = seq.feature(modality.name);

    Matrix mask;
    if (mode.wants_mask()) {
      mask = dropout_mask_matrix(f.rows, lstm.hidden_size, mode.dropout_rate, *mode.rng);
    }
    cache.exposed = lstm_sequence_forward(f, lstm, cache.lstm, mask.empty() ? nullptr : &mask);
    Matrix logits = linear_rows(cache.exposed, w_o, b_o);
    cache.probs = softmax(pool_outputs(logits, pooling));
    return cache.probs;
  }

  ScoreVector forward(const MultimodalSequence& seq) const {
    Cache cache;
    return forward(seq, ForwardMode::eval(), cache);
  }

  void backward(const Cache& cache, const Vec& dscores) {
    if (cache.lstm.length() == 0) throw value_error("temporal backward: stale cache");
    std::size_t len = cache.lstm.length();
    Vec dpool = softmax_backward(cache.probs, dscores);
    Matrix dlogits = unpool_gradient(dpool, len, pooling);

    Matrix d_exposed(len, lstm.hidden_size, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      Vec dl = dlogits.row(t);
      outer_acc(w_o.grad, dl, cache.exposed.row(t));
      for (std::size_t k = 0; k < dl.size(); ++k) b_o.grad(k, 0) += dl[k];
      Vec dh(lstm.hidden_size, 0.0);
      matvec_t_acc(w_o.value, dl, dh);
      d_exposed.set_row(t, dh);
    }
    lstm_sequence_backward(cache.lstm, d_exposed, lstm);
  }
};

// ---------------------------------------------------------------------------
// etoe (end-to-end trained late fusion)

struct EtoeModel {
  std::vector<ModalitySpec> modalities;
  std::vector<std::string> classes;
  Pooling pooling = Pooling::last;
  std::vector<LstmParams> branches;
  ParamTensor w_o, b_o;  // over the concatenated pooled hiddens

  struct Cache {
    std::vector<LstmCache> branch;
    std::vector<Matrix> branch_out;
    Vec concat;  // concatenated pooled hiddens
    ScoreVector probs;
  };

  static constexpr const char* kind_name = "etoe";
  std::string kind() const { return kind_name; }

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (auto& br : branches) {
      out.push_back(&br.w_x);
      out.push_back(&br.w_h);
      out.push_back(&br.b);
    }
    out.push_back(&w_o);
    out.push_back(&b_o);
    return out;
  }

  ScoreVector forward(const MultimodalSequence& seq, const ForwardMode& mode, Cache& cache) const {
    mode.validate();
    validate_sequence(seq, modalities);
    std::size_t len = seq.feature(modalities[0].name).rows;

    cache.branch.assign(modalities.size(), LstmCache{});
    cache.branch_out.assign(modalities.size(), Matrix{});
    cache.concat.clear();
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      Matrix mask;
      if (mode.wants_mask()) {
        mask = dropout_mask_matrix(len, branches[m].hidden_size, mode.dropout_rate, *mode.rng);
      }
      cache.branch_out[m] = lstm_sequence_forward(seq.feature(modalities[m].name), branches[m],
                                                  cache.branch[m],
                                                  mask.empty() ? nullptr : &mask);
      Vec pooled = pool_outputs(cache.branch_out[m], pooling);
      cache.concat.insert(cache.concat.end(), pooled.begin(), pooled.end());
    }

    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t m = 0, off = 0; m < branches.size(); ++m) {
      blocks.emplace_back(off, branches[m].hidden_size);
      off += branches[m].hidden_size;
    }
    Vec logits = detail::blocked_affine(w_o, b_o, cache.concat, blocks,
                                        detail::name_sorted_order(modalities));
    cache.probs = softmax(logits);
    return cache.probs;
  }

  ScoreVector forward(const MultimodalSequence& seq) const {
    Cache cache;
    return forward(seq, ForwardMode::eval(), cache);
  }

  void backward(const Cache& cache, const Vec& dscores) {
    if (cache.branch.empty() || cache.branch[0].length() == 0) {
      throw value_error("etoe backward: stale cache");
    }
    std::size_t len = cache.branch[0].length();
    Vec dlogits = softmax_backward(cache.probs, dscores);
    outer_acc(w_o.grad, dlogits, cache.concat);
    for (std::size_t k = 0; k < dlogits.size(); ++k) b_o.grad(k, 0) += dlogits[k];
    Vec dconcat(cache.concat.size(), 0.0);
    matvec_t_acc(w_o.value, dlogits, dconcat);

    std::size_t off = 0;
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      std::size_t h = branches[m].hidden_size;
      Vec dpool(dconcat.begin() + static_cast<std::ptrdiff_t>(off),
                dconcat.begin() + static_cast<std::ptrdiff_t>(off + h));
      Matrix dbr = unpool_gradient(dpool, len, pooling);
      lstm_sequence_backward(cache.branch[m], dbr, branches[m]);
      off += h;
    }
  }
};

// ---------------------------------------------------------------------------
// nontemporal (per-frame linear-softmax head, frame scores averaged)

struct NonTemporalModel {
  ModalitySpec modality;
  std::vector<std::string> classes;
  ParamTensor w, b;  // K x D, K x 1

  struct Cache {
    Matrix frames;
    std::vector<ScoreVector> frame_probs;
    ScoreVector probs;
  };

  std::string kind() const { return "nontemporal:" + modality.name; }

  std::vector<ParamTensor*> params() { return {&w, &b}; }

  ScoreVector forward(const MultimodalSequence& seq, const ForwardMode& mode, Cache& cache) const {
    mode.validate();  // no dropout here: there are no LSTM outputs to mask
    validate_sequence(seq, {modality});
    cache.frames = seq.feature(modality.name);
    std::size_t len = cache.frames.rows;

    cache.frame_probs.clear();
    cache.frame_probs.reserve(len);
    Vec avg(classes.size(), 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      Vec logits = matvec(w.value, cache.frames.row(t));
      for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += b.value(k, 0);
      ScoreVector probs = softmax(logits);
      axpy(1.0 / static_cast<double>(len), probs.p, avg);
      cache.frame_probs.push_back(std::move(probs));
    }
    cache.probs = ScoreVector(std::move(avg));
    return cache.probs;
  }

  ScoreVector forward(const MultimodalSequence& seq) const {
    Cache cache;
    return forward(seq, ForwardMode::eval(), cache);
  }

  void backward(const Cache& cache, const Vec& dscores) {
    if (cache.frame_probs.empty()) throw value_error("nontemporal backward: stale cache");
    std::size_t len = cache.frame_probs.size();
    Vec davg(dscores.size());
    for (std::size_t k = 0; k < dscores.size(); ++k) {
      davg[k] = dscores[k] / static_cast<double>(len);
    }
    for (std::size_t t = 0; t < len; ++t) {
      Vec dlogits = softmax_backward(cache.frame_probs[t], davg);
      outer_acc(w.grad, dlogits, cache.frames.row(t));
      for (std::size_t k = 0; k < dlogits.size(); ++k) b.grad(k, 0) += dlogits[k];
    }
  }
};

// ---------------------------------------------------------------------------
// generic handle

using Model = std::variant<HybridModel, EarlyFusionModel, TemporalModel, EtoeModel,
                           NonTemporalModel>;

struct TopologyId {
  enum Kind { hybrid, early, etoe, temporal, nontemporal } kind = hybrid;
  std::string modality;  // for temporal / nontemporal
};

inline TopologyId parse_topology(const std::string& s) {
  if (s == "hybrid") return {TopologyId::hybrid, ""};
  if (s == "early") return {TopologyId::early, ""};
  if (s == "etoe") return {TopologyId::etoe, ""};
  auto colon = s.find(':');
  if (colon != std::string::npos) {
    std::string head = s.substr(0, colon);
    std::string mod = s.substr(colon + 1);
    if (mod.empty()) throw value_error("topology '" + s + "' is missing a modality name");
    if (head == "temporal") return {TopologyId::temporal, mod};
    if (head == "nontemporal") return {TopologyId::nontemporal, mod};
  }
  throw value_error("unknown topology '" + s +
                    "' (expected hybrid|early|etoe|temporal:<mod>|nontemporal:<mod>)");
}

inline const ModalitySpec& find_modality(const std::vector<ModalitySpec>& specs,
                                         const std::string& name) {
  for (const auto& s : specs) {
    if (s.name == name) return s;
  }
  throw value_error("unknown modality '" + name + "'");
}

// Builds a freshly initialized model. Parameters are drawn from `rng` in the
// same order params() lists them, so a given seed fully determines the init.
inline Model make_model(const TopologyId& topo, const std::vector<ModalitySpec>& specs,
                        const std::vector<std::string>& classes, const SizesConfig& sizes,
                        Pooling pooling, SeededRng& rng) {
  if (specs.empty()) throw value_error("make_model: no modalities");
  detail::require_classes(classes);
  std::size_t num_classes = classes.size();

  switch (topo.kind) {
    case TopologyId::hybrid: {
      HybridModel m;
      m.modalities = specs;
      m.classes = classes;
      m.pooling = pooling;
      std::size_t zdim = 0;
      for (const auto& spec : specs) {
        std::size_t h = sizes.hidden_for(spec.name);
        m.branches.push_back(make_lstm_params(spec.dim, h, rng, "branch." + spec.name));
        zdim += h;
      }
      m.w_z = init_params("fusion.w", sizes.fusion, zdim, InitScheme::uniform_008, rng);
      m.b_z = init_params("fusion.b", sizes.fusion, 1, InitScheme::zeros, rng);
      m.combined = make_lstm_params(sizes.fusion, sizes.combined, rng, "combined");
      m.w_o = init_params("out.w", num_classes, sizes.combined, InitScheme::uniform_008, rng);
      m.b_o = init_params("out.b", num_classes, 1, InitScheme::zeros, rng);
      return m;
    }
    case TopologyId::early: {
      EarlyFusionModel m;
      m.modalities = specs;
      m.classes = classes;
      m.pooling = pooling;
      std::size_t d = detail::concat_dim(specs);
      m.w_in = init_params("proj.w", sizes.fusion, d, InitScheme::uniform_008, rng);
      m.b_in = init_params("proj.b", sizes.fusion, 1, InitScheme::zeros, rng);
      m.lstm = make_lstm_params(sizes.fusion, sizes.combined, rng, "lstm");
      m.w_o = init_params("out.w", num_classes, sizes.combined, InitScheme::uniform_008, rng);
      m.b_o = init_params("out.b", num_classes, 1, InitScheme::zeros, rng);
      return m;
    }
    case TopologyId::etoe: {
      EtoeModel m;
      m.modalities = specs;
      m.classes = classes;
      m.pooling = pooling;
      std::size_t zdim = 0;
      for (const auto& spec : specs) {
        std::size_t h = sizes.hidden_for(spec.name);
        m.branches.push_back(make_lstm_params(spec.dim, h, rng, "branch." + spec.name));
        zdim += h;
      }
      m.w_o = init_params("out.w", num_classes, zdim, InitScheme::uniform_008, rng);
      m.b_o = init_params("out.b", num_classes, 1, InitScheme::zeros, rng);
      return m;
    }
    case TopologyId::temporal: {
      TemporalModel m;
      m.modality = find_modality(specs, topo.modality);
      m.classes = classes;
      m.pooling = pooling;
      std::size_t h = sizes.hidden_for(m.modality.name);
      m.lstm = make_lstm_params(m.modality.dim, h, rng, "lstm");
      m.w_o = init_params("out.w", num_classes, h, InitScheme::uniform_008, rng);
      m.b_o = init_params("out.b", num_classes, 1, InitScheme::zeros, rng);
      return m;
    }
    case TopologyId::nontemporal: {
      NonTemporalModel m;
      m.modality = find_modality(specs, topo.modality);
      m.classes = classes;
      m.w = init_params("head.w", num_classes, m.modality.dim, InitScheme::uniform_008, rng);
      m.b = init_params("head.b", num_classes, 1, InitScheme::zeros, rng);
      return m;
    }
  }
  throw value_error("make_model: bad topology");
}

inline std::string model_kind(const Model& m) {
  return std::visit([](const auto& mm) { return mm.kind(); }, m);
}

inline std::vector<ParamTensor*> model_params(Model& m) {
  return std::visit([](auto& mm) { return mm.params(); }, m);
}

inline const std::vector<std::string>& model_classes(const Model& m) {
  return std::visit([](const auto& mm) -> const std::vector<std::string>& { return mm.classes; },
                    m);
}

inline ScoreVector predict(const Model& m, const MultimodalSequence& seq) {
  return std::visit([&](const auto& mm) { return mm.forward(seq); }, m);
}

// ---------------------------------------------------------------------------
// score combination

// Weighted sum of per-component score vectors. Weights must be non-negative
// and sum to 1 within 1e-9; all components must agree on the class count.
inline ScoreVector late_fusion_scores(const std::vector<ScoreVector>& components,
                                      const Vec& weights) {
  if (components.empty()) throw value_error("late_fusion_scores: no components");
  if (weights.size() != components.size()) {
    throw value_error("late_fusion_scores: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(components.size()) + " components");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw value_error("late_fusion_scores: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw value_error("late_fusion_scores: weights must sum to 1");

  std::size_t k = components[0].size();
  Vec out(k, 0.0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (components[c].size() != k) throw shape_error("late_fusion_scores: class count mismatch");
    axpy(weights[c], components[c].p, out);
  }
  return ScoreVector(std::move(out));
}

inline ScoreVector combine_components(const std::vector<ScoreVector>& components,
                                      const Vec& weights) {
  return late_fusion_scores(components, weights);
}

}  // namespace gethr

#endif
