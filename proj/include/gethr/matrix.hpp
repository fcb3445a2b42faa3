#ifndef GETHR_MATRIX_HPP
#define GETHR_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gethr/errors.hpp"
#include "gethr/rng.hpp"

namespace gethr {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All math in this library is plain
// double-precision loops; there is deliberately no BLAS behind this.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  Vec row(std::size_t i) const {
    return Vec(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
               data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }

  void set_row(std::size_t i, const Vec& v) {
    if (v.size() != cols) throw shape_error("set_row: length " + std::to_string(v.size()) +
                                            " != cols " + std::to_string(cols));
    std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline void require_shape(const Matrix& m, std::size_t r, std::size_t c, const char* what) {
  if (m.rows != r || m.cols != c) {
    throw shape_error(std::string(what) + ": expected " + std::to_string(r) + "x" +
                      std::to_string(c) + ", got " + shape_str(m));
  }
}

inline void check_finite(const Vec& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw value_error(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

inline void check_finite(const Matrix& m, const char* what) { check_finite(m.data, what); }

// y = W x
inline Vec matvec(const Matrix& w, const Vec& x) {
  if (x.size() != w.cols) {
    throw shape_error("matvec: " + shape_str(w) + " * vec" + std::to_string(x.size()));
  }
  Vec y(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    const double* row = w.data.data() + i * w.cols;
    for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

// y += W^T x  (reverse-mode companion of matvec)
inline void matvec_t_acc(const Matrix& w, const Vec& x, Vec& y) {
  if (x.size() != w.rows || y.size() != w.cols) {
    throw shape_error("matvec_t_acc: " + shape_str(w) + "^T * vec" + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + i * w.cols;
    double xi = x[i];
    for (std::size_t j = 0; j < w.cols; ++j) y[j] += row[j] * xi;
  }
}

// A += x y^T
inline void outer_acc(Matrix& a, const Vec& x, const Vec& y) {
  if (x.size() != a.rows || y.size() != a.cols) {
    throw shape_error("outer_acc: " + shape_str(a) + " += vec" + std::to_string(x.size()) +
                      " vec" + std::to_string(y.size()) + "^T");
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* row = a.data.data() + i * a.cols;
    double xi = x[i];
    for (std::size_t j = 0; j < a.cols; ++j) row[j] += xi * y[j];
  }
}

inline void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw shape_error("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Named parameter with a gradient buffer of the same shape.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), value(r, c), grad(r, c) {}

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

enum class InitScheme { uniform_008, zeros, forget_bias_one };

// forget_bias_one fills everything with zero except rows [H, 2H), which get
// 1.0; it is only meaningful for the 4H x 1 gate bias of an LSTM.
inline ParamTensor init_params(std::string name, std::size_t rows, std::size_t cols,
                               InitScheme scheme, SeededRng& rng) {
  ParamTensor p(std::move(name), rows, cols);
  switch (scheme) {
    case InitScheme::uniform_008:
      for (double& v : p.value.data) v = rng.uniform(-0.08, 0.08);
      break;
    case InitScheme::zeros:
      break;
    case InitScheme::forget_bias_one: {
      if (rows % 4 != 0) throw value_error("init_params: forget_bias_one needs 4H rows");
      std::size_t h = rows / 4;
      for (std::size_t i = h; i < 2 * h; ++i)
        for (std::size_t j = 0; j < cols; ++j) p.value(i, j) = 1.0;
      break;
    }
  }
  return p;
}

}  // namespace gethr

#endif
