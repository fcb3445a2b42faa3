#ifndef GETHR_NUMERICS_HPP
#define GETHR_NUMERICS_HPP

// Scalar nonlinearities and the softmax/cross-entropy pair.
//
//   sigmoid(x) = 1 / (1 + exp(-x))
//   softmax(s)_i = exp(s_i - max(s)) / sum_j exp(s_j - max(s))
//   ce(p, y) = -ln(max(p_y, 1e-12))
//
// The max subtraction keeps exp() in range, so softmax never overflows for
// finite inputs and always sums to 1 up to rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"

namespace gethr {

// Floor applied to probabilities before taking logs.
constexpr double kProbFloor = 1e-12;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Activation { sigmoid, tanh };

inline Vec elementwise_activation(Activation act, const Vec& x) {
  check_finite(x, "elementwise_activation input");
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = act == Activation::sigmoid ? sigmoid(x[i]) : std::tanh(x[i]);
  }
  return y;
}

inline Matrix elementwise_activation(Activation act, const Matrix& x) {
  check_finite(x, "elementwise_activation input");
  Matrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    y.data[i] = act == Activation::sigmoid ? sigmoid(x.data[i]) : std::tanh(x.data[i]);
  }
  return y;
}

// A categorical distribution: non-negative entries summing to ~1.
struct ScoreVector {
  Vec p;

  ScoreVector() = default;
  explicit ScoreVector(Vec probs) : p(std::move(probs)) {}

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }

  // Ties resolve to the smallest index.
  std::size_t argmax() const {
    if (p.empty()) throw value_error("argmax of empty score vector");
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

inline ScoreVector softmax(const Vec& scores) {
  if (scores.empty()) throw value_error("softmax: empty input");
  check_finite(scores, "softmax input");
  double mx = *std::max_element(scores.begin(), scores.end());
  Vec e(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    e[i] = std::exp(scores[i] - mx);
    sum += e[i];
  }
  for (double& v : e) v /= sum;
  return ScoreVector(std::move(e));
}

// Pullback of softmax: given dL/dp, returns dL/dscores.
//   dL/ds_j = sum_k dL/dp_k * p_k * ([k == j] - p_j)
inline Vec softmax_backward(const ScoreVector& probs, const Vec& dprobs) {
  if (probs.size() != dprobs.size()) throw shape_error("softmax_backward: size mismatch");
  double dot = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) dot += dprobs[k] * probs[k];
  Vec ds(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) ds[j] = probs[j] * (dprobs[j] - dot);
  return ds;
}

inline double cross_entropy_loss(const ScoreVector& probs, std::size_t label) {
  if (label >= probs.size()) throw value_error("cross_entropy_loss: label out of range");
  return -std::log(std::max(probs[label], kProbFloor));
}

// dL/dp for the floored cross-entropy above. Below the floor the loss is
// constant, so the gradient is zero there.
inline Vec cross_entropy_grad(const ScoreVector& probs, std::size_t label) {
  if (label >= probs.size()) throw value_error("cross_entropy_grad: label out of range");
  Vec d(probs.size(), 0.0);
  if (probs[label] > kProbFloor) d[label] = -1.0 / probs[label];
  return d;
}

}  // namespace gethr

#endif
