#ifndef GETHR_TRAINER_HPP
#define GETHR_TRAINER_HPP

// Training: SGD with heavy-ball momentum, global-norm gradient clipping and
// a staircase learning-rate schedule. One sequence is one example; batches
// average gradients over their sequences.
//
//   lr(e)   = base              for e <= 5
//           = base * 0.9^(e-5)  afterwards
//   v      <- momentum * v - lr * g_clipped
//   w      <- w + v
//
// Also: finite-difference gradient checking for every topology and the
// exhaustive simplex grid search that picks component-combination weights on
// validation data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gethr/dataset.hpp"
#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"
#include "gethr/metrics.hpp"
#include "gethr/model.hpp"
#include "gethr/numerics.hpp"
#include "gethr/rng.hpp"

namespace gethr {

// Staircase decay. e is 1-based; epochs 1..5 run at the base rate, epoch 6
// onward multiplies in another factor of 0.9. Computed as base * (9^k / 10^k)
// so repeated runs and a direct table of the schedule agree to the last bit.
inline double lr_at_epoch(double base, std::size_t epoch) {
  if (epoch == 0) throw value_error("lr_at_epoch: epochs are 1-based");
  if (epoch <= 5) return base;
  std::size_t k = epoch - 5;
  if (k >= 300) return base * std::pow(0.9, static_cast<double>(k));
  double num = 1.0, den = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    num *= 9.0;
    den *= 10.0;
  }
  return base * (num / den);
}

struct SgdUpdate {
  double grad_norm = 0.0;  // global norm before clipping
  double scale = 1.0;      // factor applied to gradients
};

// One optimizer step over all parameters. Velocity buffers are created on
// first use and must keep matching shapes afterwards. Gradients are zeroed
// on the way out. Non-finite gradients abort with divergence_error.
inline SgdUpdate sgd_momentum_step(const std::vector<ParamTensor*>& params,
                                   std::vector<Matrix>& velocity, double lr, double momentum,
                                   double clip_norm) {
  if (velocity.empty()) {
    for (const ParamTensor* p : params) velocity.emplace_back(p->value.rows, p->value.cols);
  }
  if (velocity.size() != params.size()) throw value_error("sgd step: velocity count mismatch");

  double sq = 0.0;
  for (const ParamTensor* p : params) {
    for (double g : p->grad.data) {
      if (!std::isfinite(g)) {
        throw divergence_error("non-finite gradient in '" + p->name + "'");
      }
      sq += g * g;
    }
  }
  SgdUpdate up;
  up.grad_norm = std::sqrt(sq);
  if (clip_norm > 0.0 && up.grad_norm > clip_norm) up.scale = clip_norm / up.grad_norm;

  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    Matrix& v = velocity[i];
    if (!v.same_shape(p.value)) throw shape_error("sgd step: velocity shape mismatch");
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      double g = p.grad.data[j] * up.scale;
      v.data[j] = momentum * v.data[j] - lr * g;
      p.value.data[j] += v.data[j];
    }
    p.zero_grad();
  }
  return up;
}

struct TrainConfig {
  double base_lr = 0.0002;
  double momentum = 0.9;
  double dropout = 0.3;
  double clip_norm = 5.0;
  std::size_t epochs = 40;
  std::size_t batch_size = 1;
  Pooling pooling = Pooling::last;
  std::uint64_t seed = 1;
  SizesConfig sizes;

  void validate() const {
    if (!(base_lr > 0.0)) throw value_error("base_lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw value_error("momentum must be in [0, 1)");
    if (dropout < 0.0 || dropout >= 1.0) throw value_error("dropout must be in [0, 1)");
    if (clip_norm < 0.0) throw value_error("clip_norm must be >= 0 (0 disables clipping)");
    if (batch_size == 0) throw value_error("batch_size must be >= 1");
    if (sizes.default_hidden == 0 || sizes.fusion == 0 || sizes.combined == 0) {
      throw value_error("layer sizes must be >= 1");
    }
    for (const auto& [name, h] : sizes.hidden) {
      if (h == 0) throw value_error("hidden size for '" + name + "' must be >= 1");
    }
  }
};

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.base_lr = j.value("base_lr", c.base_lr);
    c.momentum = j.value("momentum", c.momentum);
    c.dropout = j.value("dropout", c.dropout);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    if (j.contains("pooling")) c.pooling = parse_pooling(j["pooling"].get<std::string>());
    if (j.contains("hidden_sizes")) {
      for (const auto& [name, v] : j["hidden_sizes"].items()) {
        c.sizes.hidden[name] = v.get<std::size_t>();
      }
    }
    c.sizes.default_hidden = j.value("default_hidden", c.sizes.default_hidden);
    c.sizes.fusion = j.value("fusion_size", c.sizes.fusion);
    c.sizes.combined = j.value("combined_size", c.sizes.combined);
  } catch (const nlohmann::json::exception& e) {
    throw value_error(std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["base_lr"] = c.base_lr;
  j["momentum"] = c.momentum;
  j["dropout"] = c.dropout;
  j["clip_norm"] = c.clip_norm;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["pooling"] = to_string(c.pooling);
  j["seed"] = c.seed;
  j["hidden_sizes"] = c.sizes.hidden;
  j["default_hidden"] = c.sizes.default_hidden;
  j["fusion_size"] = c.sizes.fusion;
  j["combined_size"] = c.sizes.combined;
  return j;
}

// --------------------------------------------------------------------------
// evaluation helpers

inline std::vector<ScoreVector> score_split(const Model& model,
                                            const std::vector<MultimodalSequence>& seqs) {
  std::vector<ScoreVector> out;
  out.reserve(seqs.size());
  for (const auto& seq : seqs) out.push_back(predict(model, seq));
  return out;
}

inline LabelSeq labels_of(const std::vector<MultimodalSequence>& seqs) {
  LabelSeq out;
  out.reserve(seqs.size());
  for (const auto& seq : seqs) out.push_back(seq.label);
  return out;
}

inline LabelSeq argmax_labels(const std::vector<ScoreVector>& scores) {
  LabelSeq out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.argmax());
  return out;
}

inline double eval_accuracy(const Model& model, const std::vector<MultimodalSequence>& seqs) {
  return accuracy(argmax_labels(score_split(model, seqs)), labels_of(seqs));
}

// --------------------------------------------------------------------------
// training loop

struct EpochReport {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // eval-mode pass after the epoch
  double val_accuracy = 0.0;
};

struct TrainResult {
  Model model;  // parameters from the best validation epoch
  std::vector<EpochReport> reports;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, SeededRng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = rng.next_index(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

// Trains `kind` on the train split, tracking accuracy on the val split after
// every epoch. Returns the parameters of the best-validation epoch (earliest
// wins ties). Sequences are visited in a fresh shuffled order each epoch;
// all randomness (init, order, dropout) derives from cfg.seed.
inline TrainResult train_model(const std::vector<MultimodalSequence>& train,
                               const std::vector<MultimodalSequence>& val,
                               const std::vector<ModalitySpec>& specs,
                               const std::vector<std::string>& classes, const std::string& kind,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) throw value_error("train_model: empty split");
  for (const auto* split : {&train, &val}) {
    for (const auto& seq : *split) {
      validate_sequence(seq, specs);
      if (seq.label >= classes.size()) {
        throw value_error("sequence " + seq.id + ": label index out of range");
      }
    }
  }
  for (std::size_t k = 0; k < classes.size(); ++k) {
    bool seen = false;
    for (const auto& seq : train) seen = seen || seq.label == k;
    if (!seen) throw value_error("class '" + classes[k] + "' has no training sequences");
  }

  SeededRng init_rng(derive_seed(cfg.seed, "init"));
  Model live = make_model(parse_topology(kind), specs, classes, cfg.sizes, cfg.pooling, init_rng);
  Model best = live;  // value-semantic deep copy

  TrainResult res;
  res.best_val_accuracy = -1.0;

  std::vector<Matrix> velocity;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = lr_at_epoch(cfg.base_lr, epoch);
    SeededRng epoch_rng(derive_seed(cfg.seed, "epoch:" + std::to_string(epoch)));
    detail::shuffle_indices(order, epoch_rng);
    ForwardMode mode = ForwardMode::training(cfg.dropout, &epoch_rng);

    double loss_sum = 0.0;
    std::size_t batch_fill = 0;
    auto params = model_params(live);
    try {
      for (std::size_t n = 0; n < order.size(); ++n) {
        const MultimodalSequence& seq = train[order[n]];
        std::visit(
            [&](auto& m) {
              typename std::decay_t<decltype(m)>::Cache cache;
              ScoreVector probs = m.forward(seq, mode, cache);
              loss_sum += cross_entropy_loss(probs, seq.label);
              m.backward(cache, cross_entropy_grad(probs, seq.label));
            },
            live);
        ++batch_fill;
        if (batch_fill == cfg.batch_size || n + 1 == order.size()) {
          if (batch_fill > 1) {
            double inv = 1.0 / static_cast<double>(batch_fill);
            for (ParamTensor* p : params)
              for (double& g : p->grad.data) g *= inv;
          }
          sgd_momentum_step(params, velocity, lr, cfg.momentum, cfg.clip_norm);
          batch_fill = 0;
        }
      }
    } catch (const divergence_error& e) {
      throw divergence_error(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
    }

    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = lr;
    rep.mean_loss = loss_sum / static_cast<double>(train.size());
    rep.train_accuracy = eval_accuracy(live, train);
    rep.val_accuracy = eval_accuracy(live, val);
    res.reports.push_back(rep);

    if (rep.val_accuracy > res.best_val_accuracy) {
      res.best_val_accuracy = rep.val_accuracy;
      res.best_epoch = epoch;
      best = live;
    }
  }

  res.model = std::move(best);
  return res;
}

// --------------------------------------------------------------------------
// gradient checking

struct GradCheckConfig {
  std::size_t num_modalities = 2;
  std::size_t dim = 2;
  std::size_t hidden = 2;
  std::size_t fusion = 3;
  std::size_t combined = 2;
  std::size_t num_classes = 2;
  std::size_t length = 3;
  Pooling pooling = Pooling::last;
  std::uint64_t seed = 1;
  double eps = 1e-5;
};

// Central-difference check of the analytic gradient of the cross-entropy
// loss through a freshly initialized model on one random sequence. Returns
// the maximum over parameters of |analytic - numeric| / max(1, |a| + |n|).
inline double grad_check(const std::string& kind, const GradCheckConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw value_error("grad_check: eps must be > 0");

  SeededRng rng(cfg.seed);
  std::vector<ModalitySpec> specs;
  for (const auto& name : detail::modality_names(cfg.num_modalities)) {
    specs.push_back({name, cfg.dim});
  }
  std::vector<std::string> classes;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) classes.push_back("c" + std::to_string(k));

  SizesConfig sizes;
  sizes.default_hidden = cfg.hidden;
  sizes.fusion = cfg.fusion;
  sizes.combined = cfg.combined;
  Model model = make_model(parse_topology(kind), specs, classes, sizes, cfg.pooling, rng);

  std::size_t total = 0;
  for (const ParamTensor* p : model_params(model)) total += p->size();
  if (total > 2000) {
    throw value_error("grad_check: " + std::to_string(total) + " parameters is too many");
  }

  MultimodalSequence seq;
  seq.id = "gradcheck";
  for (const auto& spec : specs) {
    Matrix f(cfg.length, spec.dim);
    for (double& v : f.data) v = rng.uniform(-1.0, 1.0);
    seq.features[spec.name] = std::move(f);
  }
  std::size_t label = rng.next_index(cfg.num_classes);

  auto loss_now = [&]() { return cross_entropy_loss(predict(model, seq), label); };

  auto params = model_params(model);
  for (ParamTensor* p : params) p->zero_grad();
  std::visit(
      [&](auto& m) {
        typename std::decay_t<decltype(m)>::Cache cache;
        ScoreVector probs = m.forward(seq, ForwardMode::eval(), cache);
        m.backward(cache, cross_entropy_grad(probs, label));
      },
      model);

  double worst = 0.0;
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      double saved = p->value.data[i];
      p->value.data[i] = saved + cfg.eps;
      double lp = loss_now();
      p->value.data[i] = saved - cfg.eps;
      double lm = loss_now();
      p->value.data[i] = saved;
      double numeric = (lp - lm) / (2.0 * cfg.eps);
      double analytic = p->grad.data[i];
      double rel = std::abs(analytic - numeric) /
                   std::max(1.0, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// --------------------------------------------------------------------------
// combination weights

enum class FusionMetric { accuracy, map };

inline FusionMetric parse_fusion_metric(const std::string& s) {
  if (s == "accuracy") return FusionMetric::accuracy;
  if (s == "map") return FusionMetric::map;
  throw value_error("unknown weight-learning metric '" + s + "' (expected accuracy|map)");
}

namespace detail {

inline double fusion_objective(const std::vector<std::vector<ScoreVector>>& components,
                               const Vec& weights, const LabelSeq& labels,
                               const std::vector<std::string>& ids, FusionMetric metric) {
  std::size_t n = labels.size();
  std::vector<ScoreVector> combined;
  combined.reserve(n);
  std::vector<ScoreVector> per_seq(components.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < components.size(); ++c) per_seq[c] = components[c][i];
    combined.push_back(late_fusion_scores(per_seq, weights));
  }
  if (metric == FusionMetric::accuracy) return accuracy(argmax_labels(combined), labels);
  Matrix scores(n, combined[0].size());
  for (std::size_t i = 0; i < n; ++i) scores.set_row(i, combined[i].p);
  return map_from_scores(scores, labels, ids);
}

inline void enumerate_simplex(std::size_t slots, std::size_t units, Vec& partial,
                              const std::function<void(const Vec&)>& visit) {
  if (slots == 1) {
    partial.push_back(static_cast<double>(units) * 0.05);
    visit(partial);
    partial.pop_back();
    return;
  }
  for (std::size_t u = 0; u <= units; ++u) {
    partial.push_back(static_cast<double>(u) * 0.05);
    enumerate_simplex(slots - 1, units - u, partial, visit);
    partial.pop_back();
  }
}

}  // namespace detail

// Exhaustive search over the weight simplex in steps of 0.05, maximizing the
// chosen metric of the combined scores on (typically) the validation split.
// Ties prefer fewer non-zero weights, then the lexicographically greatest
// weight vector, so the result is unique.
inline Vec learn_combination_weights(const std::vector<std::vector<ScoreVector>>& components,
                                     const LabelSeq& labels, const std::vector<std::string>& ids,
                                     FusionMetric metric) {
  if (components.empty()) throw value_error("learn_combination_weights: no components");
  if (components.size() > 8) {
    throw value_error("learn_combination_weights: more than 8 components (grid too large)");
  }
  if (labels.empty()) throw value_error("learn_combination_weights: no sequences");
  if (ids.size() != labels.size()) throw value_error("learn_combination_weights: id count");
  for (const auto& comp : components) {
    if (comp.size() != labels.size()) {
      throw value_error("learn_combination_weights: component score count mismatch");
    }
  }

  Vec best_w;
  double best_val = -1.0;
  std::size_t best_nnz = 0;
  auto consider = [&](const Vec& w) {
    double val = detail::fusion_objective(components, w, labels, ids, metric);
    std::size_t nnz = 0;
    for (double x : w) nnz += x != 0.0;
    bool better = false;
    if (val > best_val) {
      better = true;
    } else if (val == best_val) {
      if (nnz < best_nnz) {
        better = true;
      } else if (nnz == best_nnz && std::lexicographical_compare(best_w.begin(), best_w.end(),
                                                                 w.begin(), w.end())) {
        better = true;
      }
    }
    if (better) {
      best_val = val;
      best_nnz = nnz;
      best_w = w;
    }
  };

  Vec partial;
  detail::enumerate_simplex(components.size(), 20, partial, consider);
  return best_w;
}

}  // namespace gethr

#endif
