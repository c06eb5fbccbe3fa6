// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Threshold controller: a clamped usage gap is injected as the gradient of
// the logit-space threshold and applied with AdamW.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "ham/core_math.hpp"

namespace ham {

struct ControllerState {
  double p_tau = 0.0;
  double adam_m = 0.0;
  double adam_v = 0.0;
  std::int64_t step = 0;
  std::int64_t freeze_N = 20000;
  double f_target = 0.5;
  double gain_gamma = 1.0;
  double clip_c = 1.0;
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double scale_s = 2.0;

  double tau() const { return scale_s * sigmoid(p_tau); }
  void validate() const {
    if (!(f_target > 0.0 && f_target < 1.0)) throw ConfigError("controller: f_target must lie in (0, 1)");
    if (!(gain_gamma > 0.0) || !(clip_c > 0.0)) throw ConfigError("controller: gain and clip must be positive");
    if (step < 0 || freeze_N < 0) throw ConfigError("controller: negative step counter");
  }
};

// Selected and total token counts for one sequence.
struct BatchUsage {
  std::size_t selected = 0;
  std::size_t tokens = 0;
};

// Pooled mean of per-sequence (f_actual - f_target) across all ranks.
inline double mean_gap(const std::vector<std::vector<BatchUsage>>& ranks, double f_target) {
  double gap_sum = 0.0;
  std::size_t n = 0;
  for (const auto& rank : ranks) {
    for (const auto& u : rank) {
      if (u.tokens == 0 || u.selected > u.tokens) throw ConfigError("mean_gap: invalid sequence counts");
      gap_sum += static_cast<double>(u.selected) / static_cast<double>(u.tokens) - f_target;
      ++n;
    }
  }
  if (n == 0) throw ConfigError("mean_gap: empty batch");
  return gap_sum / static_cast<double>(n);
}

inline double mean_gap(const std::vector<BatchUsage>& seqs, double f_target) {
  return mean_gap(std::vector<std::vector<BatchUsage>>{seqs}, f_target);
}

inline double synthetic_grad(double gap, const ControllerState& st) {
  return std::clamp(-st.gain_gamma * gap, -st.clip_c, st.clip_c);
}

// Frozen steps leave p_tau and the moments untouched; bias correction counts
// unfrozen steps only.
inline ControllerState controller_step(ControllerState st, double gap) {
  st.step += 1;
  if (st.step <= st.freeze_N) return st;
  const double g = synthetic_grad(gap, st);
  const auto k = static_cast<double>(st.step - st.freeze_N);
  st.p_tau -= st.lr * st.weight_decay * st.p_tau;
  st.adam_m = st.beta1 * st.adam_m + (1.0 - st.beta1) * g;
  st.adam_v = st.beta2 * st.adam_v + (1.0 - st.beta2) * g * g;
  const double mh = st.adam_m / (1.0 - std::pow(st.beta1, k));
  const double vh = st.adam_v / (1.0 - std::pow(st.beta2, k));
  st.p_tau -= st.lr * mh / (std::sqrt(vh) + st.adam_eps);
  return st;
}

struct ControllerTraceRow {
  std::int64_t step;
  double gap;
  double p_tau;
  double tau;
  double realized;
};

inline void write_controller_csv(const std::vector<ControllerTraceRow>& rows, std::ostream& os) {
  os << "step,gap,p_tau,tau,realized\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.step << ',' << r.gap << ',' << r.p_tau << ',' << r.tau << ',' << r.realized << '\n';
}

// Closed-loop run against a stationary Beta(a, b) score stream: each step draws
// a batch, selects scores >= tau, and feeds the usage gap back.
struct ControllerSim {
  double f_target = 0.5;
  std::int64_t steps = 5000;
  std::size_t batch_tokens = 256;
  double beta_a = 2.0;
  double beta_b = 5.0;
  std::uint64_t seed = 0;
  std::int64_t freeze_N = 0;
  std::size_t heldout_batches = 64;
};

struct ControllerSimResult {
  std::vector<ControllerTraceRow> trace;
  ControllerState final_state;
  double heldout_fraction = 0.0;
};

namespace detail {

struct BetaSampler {
  std::gamma_distribution<double> x, y;
  BetaSampler(double a, double b) : x(a, 1.0), y(b, 1.0) {}
  template <class R>
  double operator()(R& rng) {
    const double u = x(rng);
    return u / (u + y(rng));
  }
};

}  // namespace detail

inline ControllerSimResult simulate_controller(const ControllerSim& sim) {
  if (sim.batch_tokens == 0 || sim.steps < 0) throw ConfigError("simulate_controller: empty run");
  std::mt19937_64 rng(sim.seed);
  detail::BetaSampler beta(sim.beta_a, sim.beta_b);
  auto draw = [&] {
    std::vector<double> b(sim.batch_tokens);
    for (double& x : b) x = beta(rng);
    return b;
  };
  auto usage_of = [](const std::vector<double>& b, double tau) {
    BatchUsage u{0, b.size()};
    for (double x : b) u.selected += x >= tau;
    return u;
  };
  auto fraction = [&](const std::vector<double>& b, double tau) {
    const BatchUsage u = usage_of(b, tau);
    return static_cast<double>(u.selected) / static_cast<double>(u.tokens);
  };

  ControllerState st;
  st.f_target = sim.f_target;
  st.freeze_N = sim.freeze_N;
  st.scale_s = 1.0;  // scores live in [0, 1]
  st.validate();
  // Start at the mean score of the first batch.
  std::vector<double> batch = draw();
  double mean = 0.0;
  for (double x : batch) mean += x / static_cast<double>(batch.size());
  st.p_tau = std::log(mean / (1.0 - mean));

  ControllerSimResult res;
  res.trace.reserve(static_cast<std::size_t>(sim.steps));
  for (std::int64_t i = 0; i < sim.steps; ++i) {
    if (i > 0) batch = draw();
    const BatchUsage u = usage_of(batch, st.tau());
    const double f = static_cast<double>(u.selected) / static_cast<double>(u.tokens);
    const double gap = mean_gap(std::vector<BatchUsage>{u}, st.f_target);
    st = controller_step(st, gap);
    res.trace.push_back({st.step, gap, st.p_tau, st.tau(), f});
  }
  double held = 0.0;
  for (std::size_t i = 0; i < sim.heldout_batches; ++i)
    held += fraction(draw(), st.tau()) / static_cast<double>(sim.heldout_batches);
  res.final_state = st;
  res.heldout_fraction = held;
  return res;
}

}  // namespace ham
