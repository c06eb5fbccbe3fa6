// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Token routing: per-head scores, head aggregation, logit-space thresholds,
// cross-layer score averaging and the value attachment scalar.

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ham/core_math.hpp"

namespace ham {

enum class RouterKind { PredictionError, InputLinear, InputMlp };
enum class Aggregation { Min, Max };

struct RouterConfig {
  RouterKind kind = RouterKind::PredictionError;
  Aggregation aggregation = Aggregation::Min;
  bool eda_enabled = false;
  double eda_gamma = 0.5;
  // Scale KV values by the attachment scalar. Unset means "learned routers only".
  std::optional<bool> attach;
  std::size_t mlp_hidden = 256;

  bool learned() const { return kind != RouterKind::PredictionError; }
  bool attach_enabled() const { return attach.value_or(learned()); }
  // Range of the routing metric: cosine distance lives in [0, 2], sigmoids in (0, 1).
  double metric_scale() const { return learned() ? 1.0 : 2.0; }
};

struct ThresholdParam {
  double p_tau = 0.0;
  double scale_s = 2.0;
};

struct RoutingDecision {
  Vec head_scores;
  double raw_score = 0.0;  // aggregated, before cross-layer averaging
  double score = 0.0;      // e_t compared against the threshold
  bool selected = false;
  double attach = 1.0;
};

inline double aggregate(std::span<const double> head_scores, Aggregation mode) {
  if (head_scores.empty()) throw DimensionError("aggregate: no head scores");
  return mode == Aggregation::Min ? *std::min_element(head_scores.begin(), head_scores.end())
                                  : *std::max_element(head_scores.begin(), head_scores.end());
}

inline double effective_threshold(const ThresholdParam& tp) {
  if (!(tp.scale_s > 0.0)) throw ConfigError("effective_threshold: scale must be positive");
  return tp.scale_s * sigmoid(tp.p_tau);
}

// Inverse of effective_threshold for tau in [0, scale]; endpoints map to +-inf.
inline double threshold_logit(double tau, double scale_s) {
  if (!(scale_s > 0.0) || tau < 0.0 || tau > scale_s)
    throw ConfigError("threshold_logit: tau outside [0, scale]");
  const double u = tau / scale_s;
  if (u == 0.0) return -std::numeric_limits<double>::infinity();
  if (u == 1.0) return std::numeric_limits<double>::infinity();
  return std::log(u / (1.0 - u));
}

inline bool select(double e, double tau) { return e >= tau; }

inline double eda_combine(double e_curr, double e_prev, double gamma) {
  return gamma * e_curr + (1.0 - gamma) * e_prev;
}

inline Vec attach_score(std::span<const double> v, double p) { return scaled(v, p); }

// Shallow: one linear unit. Deep: d -> hidden -> hidden -> 1 with GELU between layers.
struct InputRouterWeights {
  std::vector<Matrix> w;
  std::vector<Vec> b;

  bool empty() const { return w.empty(); }
};

inline InputRouterWeights zero_router(RouterKind kind, std::size_t d_hidden, std::size_t hidden) {
  InputRouterWeights r;
  if (kind == RouterKind::InputLinear) {
    r.w.emplace_back(d_hidden, 1);
  } else if (kind == RouterKind::InputMlp) {
    r.w = {Matrix(d_hidden, hidden), Matrix(hidden, hidden), Matrix(hidden, 1)};
    r.b = {Vec(hidden, 0.0), Vec(hidden, 0.0), Vec(1, 0.0)};
  }
  return r;
}

// One score per token, broadcast to every head.
inline Vec route_input(std::span<const double> x, const InputRouterWeights& r, std::size_t heads) {
  if (r.w.size() != 1 && r.w.size() != 3) throw DimensionError("route_input: expected 1 or 3 layers");
  detail::require_dims(r.b.empty() || r.b.size() == r.w.size(), "route_input: bias count");
  Vec h(x.begin(), x.end());
  for (std::size_t l = 0; l < r.w.size(); ++l) {
    h = matvec(h, r.w[l]);
    if (!r.b.empty()) {
      detail::require_dims(r.b[l].size() == h.size(), "route_input: bias length");
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += r.b[l][i];
    }
    if (l + 1 < r.w.size())
      for (double& z : h) z = gelu(z);
  }
  detail::require_dims(h.size() == 1, "route_input: final layer must have one output");
  return Vec(heads, sigmoid(h[0]));
}

// Scores -> decision. `prev_score` is the same token's score in the previous
// layer; pass nullopt on the first layer or when averaging is off.
inline RoutingDecision decide(Vec head_scores, const RouterConfig& cfg, double tau,
                              std::optional<double> prev_score) {
  RoutingDecision d;
  d.raw_score = aggregate(head_scores, cfg.aggregation);
  d.score = d.raw_score;
  if (cfg.eda_enabled && prev_score) d.score = eda_combine(d.raw_score, *prev_score, cfg.eda_gamma);
  d.selected = select(d.score, tau);
  d.attach = cfg.attach_enabled() ? d.raw_score / cfg.metric_scale() : 1.0;
  d.head_scores = std::move(head_scores);
  return d;
}

}  // namespace ham
