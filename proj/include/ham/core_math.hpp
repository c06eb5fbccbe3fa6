// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Dense float64 primitives shared by the recurrence, the scratchpad and the
// layer assembly. Everything here is a pure function.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ham/errors.hpp"

namespace ham {

using Vec = std::vector<double>;

// Row-major dense matrix. Projections are applied as row-vector products,
// y = x W, so a weight of shape (in, out) maps in-dim inputs to out-dim outputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) {
  // log1p(exp(z)) without overflow for large z.
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double silu(double z) { return z * sigmoid(z); }

// Exact (erf) GELU.
inline double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0))); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_dims(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// y_j = sum_i x_i W(i, j)
inline Vec matvec(std::span<const double> x, const Matrix& w) {
  detail::require_dims(x.size() == w.rows(), "matvec: input length != weight rows");
  Vec y(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    const auto wr = w.row(i);
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += xi * wr[j];
  }
  return y;
}

inline Vec scaled(std::span<const double> x, double c) {
  Vec y(x.begin(), x.end());
  for (double& v : y) v *= c;
  return y;
}

inline Vec l2_normalized(std::span<const double> x, double eps = 1e-12) {
  const double n = l2_norm(x);
  return scaled(x, 1.0 / std::max(n, eps));
}

// out_i = gain_i * x_i / sqrt(mean(x^2) + eps). A zero vector with eps == 0 maps to zero.
inline Vec rms_norm(std::span<const double> x, std::span<const double> gain, double eps = 1e-6) {
  detail::require_dims(x.size() == gain.size(), "rms_norm: gain length mismatch");
  detail::require_dims(!x.empty(), "rms_norm: empty input");
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  const double denom = std::sqrt(ms + eps);
  Vec out(x.size(), 0.0);
  if (denom == 0.0) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * x[i] / denom;
  return out;
}

inline Vec gated_rms_norm(std::span<const double> x, std::span<const double> gain,
                          std::span<const double> gate_pre, double eps = 1e-6) {
  detail::require_dims(x.size() == gate_pre.size(), "gated_rms_norm: gate length mismatch");
  Vec out = rms_norm(x, gain, eps);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= silu(gate_pre[i]);
  return out;
}

// 1 - <a,b> / (|a||b| + eps), clamped to [0, 2].
inline double cosine_distance(std::span<const double> a, std::span<const double> b,
                              double eps = 1e-8) {
  detail::require_dims(a.size() == b.size(), "cosine_distance: length mismatch");
  const double num = dot(a, b);
  const double d = 1.0 - num / (l2_norm(a) * l2_norm(b) + eps);
  return std::clamp(d, 0.0, 2.0);
}

// Rotary embedding with interleaved pairs: dims (2i, 2i+1) rotate by
// position * base^(-2i / len).
inline Vec rope_apply(std::span<const double> x, std::size_t position, double base = 500000.0) {
  detail::require_dims(x.size() % 2 == 0, "rope_apply: odd length");
  if (!(base > 0.0)) throw ConfigError("rope_apply: base must be positive");
  Vec out(x.size());
  const double len = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size() / 2; ++i) {
    const double freq = std::pow(base, -2.0 * static_cast<double>(i) / len);
    const double angle = static_cast<double>(position) * freq;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double x0 = x[2 * i];
    const double x1 = x[2 * i + 1];
    out[2 * i] = x0 * c - x1 * s;
    out[2 * i + 1] = x0 * s + x1 * c;
  }
  return out;
}

enum class Activation { None, Silu };

// Per-channel causal filter with zero left padding. `kernel` is (channels, width);
// kernel(c, width-1) multiplies the current step.
inline std::vector<Vec> causal_depthwise_conv(const std::vector<Vec>& seq, const Matrix& kernel,
                                              Activation act = Activation::Silu) {
  const std::size_t w = kernel.cols();
  detail::require_dims(w >= 1, "causal_depthwise_conv: width must be >= 1");
  std::vector<Vec> out;
  out.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    detail::require_dims(seq[t].size() == kernel.rows(),
                         "causal_depthwise_conv: channel count != kernel rows");
    Vec y(kernel.rows(), 0.0);
    for (std::size_t c = 0; c < kernel.rows(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w; ++j) {
        // source index t - w + 1 + j, skipped when negative
        if (t + 1 + j < w) continue;
        acc += kernel(c, j) * seq[t + 1 + j - w][c];
      }
      y[c] = act == Activation::Silu ? silu(acc) : acc;
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace ham
