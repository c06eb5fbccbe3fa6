// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// One HAM layer: shared Q/K/V projections feeding a gated delta-rule memory
// and a routed softmax scratchpad, recombined by per-head sigmoid gates.
// Also the SwiGLU FFN and the pre-norm residual stack.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ham/core_math.hpp"
#include "ham/cost_model.hpp"
#include "ham/rnn_memory.hpp"
#include "ham/router.hpp"
#include "ham/scratchpad.hpp"

namespace ham {

struct LayerConfig {
  std::size_t d_hidden = 1792;
  std::size_t d_qk = 1280;
  std::size_t d_v = 1920;
  std::size_t rnn_qk_head = 256;
  std::size_t rnn_v_head = 384;
  std::size_t kv_qk_head = 128;
  std::size_t kv_v_head = 192;
  std::size_t d_conv = 4;
  std::size_t d_int = 2560;
  double rope_base = 500000.0;
  std::size_t chunk = 64;
  bool chunked = false;
  bool l2_normalize_qk = true;
  double norm_eps = 1e-6;
  double error_eps = 1e-8;
  RouterConfig router;
  ThresholdParam threshold{0.0, 2.0};
  bool learnable_threshold = false;
  std::optional<double> tau;  // fixed threshold; overrides `threshold` when set

  std::size_t h_rnn() const { return d_qk / rnn_qk_head; }
  std::size_t h_kv() const { return d_qk / kv_qk_head; }
  double tau_value() const { return tau ? *tau : effective_threshold(threshold); }

  // Widths from the architectural relations; d must be a multiple of 14 and
  // give whole head counts.
  static LayerConfig from_hidden(std::size_t d) {
    if (d % 14 != 0) throw ConfigError("from_hidden: d_hidden must be a multiple of 14");
    LayerConfig c;
    c.d_hidden = d;
    c.d_qk = 5 * d / 7;
    c.d_v = 15 * d / 14;
    c.d_int = 10 * d / 7;
    c.validate();
    return c;
  }

  void validate() const {
    if (d_hidden == 0 || d_qk == 0 || d_v == 0 || rnn_qk_head == 0 || kv_qk_head == 0)
      throw ConfigError("LayerConfig: zero dimension");
    if (d_qk % rnn_qk_head != 0 || d_qk % kv_qk_head != 0)
      throw ConfigError("LayerConfig: d_qk must be divisible by both key head widths");
    if (h_rnn() * rnn_v_head != d_v || h_kv() * kv_v_head != d_v)
      throw ConfigError("LayerConfig: value head widths must tile d_v on both paths");
    if (kv_qk_head % 2 != 0) throw ConfigError("LayerConfig: KV key head width must be even");
    if (d_conv == 0 || chunk == 0) throw ConfigError("LayerConfig: d_conv and chunk must be >= 1");
    if (!(router.eda_gamma > 0.0 && router.eda_gamma < 1.0))
      throw ConfigError("LayerConfig: EDA gamma must lie in (0, 1)");
  }
};

struct LayerWeights {
  Vec prenorm;
  Matrix w_q, w_k, w_v;
  Matrix rnn_conv_q, rnn_conv_k, rnn_conv_v;  // (channels, d_conv)
  Matrix kv_conv_q, kv_conv_k, kv_conv_v;
  Vec rnn_norm_q, rnn_norm_k, rnn_norm_v;
  Vec kv_norm_q, kv_norm_k, kv_norm_v;
  RnnScalarParams scalars;
  Vec threshold_logit;  // one entry when the threshold is a parameter
  InputRouterWeights router;
  Vec rnn_out_norm;     // rnn_v_head, shared by all RNN heads
  Matrix norm_gate;     // (d_hidden, d_v)
  Vec kv_out_norm;      // kv_v_head
  Matrix gate_rnn;      // (d_hidden, h_rnn)
  Matrix gate_kv;       // (d_hidden, h_kv)
  Matrix w_o;           // (d_v, d_hidden)

  // f(name, Matrix&) or f(name, Vec&) for every tensor, in checkpoint order.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const auto& t) { n += t.size(); });
    return n;
  }

 private:
  template <class Self, class F>
  static void visit(Self& w, F& f) {
    f("prenorm", w.prenorm);
    f("w_q", w.w_q);
    f("w_k", w.w_k);
    f("w_v", w.w_v);
    f("rnn_conv_q", w.rnn_conv_q);
    f("rnn_conv_k", w.rnn_conv_k);
    f("rnn_conv_v", w.rnn_conv_v);
    f("kv_conv_q", w.kv_conv_q);
    f("kv_conv_k", w.kv_conv_k);
    f("kv_conv_v", w.kv_conv_v);
    f("rnn_norm_q", w.rnn_norm_q);
    f("rnn_norm_k", w.rnn_norm_k);
    f("rnn_norm_v", w.rnn_norm_v);
    f("kv_norm_q", w.kv_norm_q);
    f("kv_norm_k", w.kv_norm_k);
    f("kv_norm_v", w.kv_norm_v);
    f("a_proj", w.scalars.a_proj);
    f("b_proj", w.scalars.b_proj);
    f("A_log", w.scalars.A_log);
    f("dt_bias", w.scalars.dt_bias);
    f("threshold_logit", w.threshold_logit);
    for (std::size_t i = 0; i < w.router.w.size(); ++i) f("router_w" + std::to_string(i), w.router.w[i]);
    for (std::size_t i = 0; i < w.router.b.size(); ++i) f("router_b" + std::to_string(i), w.router.b[i]);
    f("rnn_out_norm", w.rnn_out_norm);
    f("norm_gate", w.norm_gate);
    f("kv_out_norm", w.kv_out_norm);
    f("gate_rnn", w.gate_rnn);
    f("gate_kv", w.gate_kv);
    f("w_o", w.w_o);
  }
};

struct InitOptions {
  double A_log = 0.0;
  double dt_bias = 0.0;
  double proj_scale = 1.0;  // multiplies the 1/sqrt(fan_in) std of every projection
};

namespace detail {

inline void fill_normal(Matrix& m, std::mt19937_64& rng, double std) {
  std::normal_distribution<double> n(0.0, std);
  for (double& x : m.flat()) x = n(rng);
}

inline Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  Matrix m(rows, cols);
  fill_normal(m, rng, scale / std::sqrt(static_cast<double>(rows)));
  return m;
}

// Conv kernels are (channels, width), so fan-in is the width.
inline Matrix conv_kernel(std::size_t channels, std::size_t width, std::mt19937_64& rng,
                          double scale) {
  Matrix m(channels, width);
  fill_normal(m, rng, scale / std::sqrt(static_cast<double>(width)));
  return m;
}

}  // namespace detail

inline LayerWeights init_weights(const LayerConfig& cfg, std::uint64_t seed,
                                 const InitOptions& opt = {}) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg.d_hidden, qk = cfg.d_qk, v = cfg.d_v, w = cfg.d_conv;
  const double s = opt.proj_scale;
  LayerWeights lw;
  lw.prenorm.assign(d, 1.0);
  lw.w_q = detail::gaussian(d, qk, rng, s);
  lw.w_k = detail::gaussian(d, qk, rng, s);
  lw.w_v = detail::gaussian(d, v, rng, s);
  lw.rnn_conv_q = detail::conv_kernel(qk, w, rng, s);
  lw.rnn_conv_k = detail::conv_kernel(qk, w, rng, s);
  lw.rnn_conv_v = detail::conv_kernel(v, w, rng, s);
  lw.kv_conv_q = detail::conv_kernel(qk, w, rng, s);
  lw.kv_conv_k = detail::conv_kernel(qk, w, rng, s);
  lw.kv_conv_v = detail::conv_kernel(v, w, rng, s);
  lw.rnn_norm_q.assign(qk, 1.0);
  lw.rnn_norm_k.assign(qk, 1.0);
  lw.rnn_norm_v.assign(v, 1.0);
  lw.kv_norm_q.assign(qk, 1.0);
  lw.kv_norm_k.assign(qk, 1.0);
  lw.kv_norm_v.assign(v, 1.0);
  lw.scalars.a_proj = detail::gaussian(d, cfg.h_rnn(), rng, s);
  lw.scalars.b_proj = detail::gaussian(d, cfg.h_rnn(), rng, s);
  lw.scalars.A_log.assign(cfg.h_rnn(), opt.A_log);
  lw.scalars.dt_bias.assign(cfg.h_rnn(), opt.dt_bias);
  if (cfg.learnable_threshold) lw.threshold_logit.assign(1, cfg.threshold.p_tau);
  lw.router = zero_router(cfg.router.kind, d, cfg.router.mlp_hidden);
  for (auto& m : lw.router.w) detail::fill_normal(m, rng, s / std::sqrt(static_cast<double>(m.rows())));
  lw.rnn_out_norm.assign(cfg.rnn_v_head, 1.0);
  lw.norm_gate = detail::gaussian(d, v, rng, s);
  lw.kv_out_norm.assign(cfg.kv_v_head, 1.0);
  lw.gate_rnn = detail::gaussian(d, cfg.h_rnn(), rng, s);
  lw.gate_kv = detail::gaussian(d, cfg.h_kv(), rng, s);
  lw.w_o = detail::gaussian(v, d, rng, s);
  return lw;
}

// Cost-model view of a layer configuration, for parameter cross-checks.
inline cost::ArchConfig arch_config(const LayerConfig& cfg, double layers = 1) {
  cost::ArchConfig a;
  a.family = cost::Family::Ham;
  a.d = static_cast<double>(cfg.d_hidden);
  a.layers = layers;
  a.d_conv = static_cast<double>(cfg.d_conv);
  a.chunk = static_cast<double>(cfg.chunk);
  a.d_qk = static_cast<double>(cfg.d_qk);
  a.d_v = static_cast<double>(cfg.d_v);
  a.rnn_qk_head = static_cast<double>(cfg.rnn_qk_head);
  a.rnn_v_head = static_cast<double>(cfg.rnn_v_head);
  a.kv_qk_head = static_cast<double>(cfg.kv_qk_head);
  a.kv_v_head = static_cast<double>(cfg.kv_v_head);
  a.d_int = static_cast<double>(cfg.d_int);
  a.learnable_threshold = cfg.learnable_threshold;
  a.router = cfg.router.kind == RouterKind::InputLinear ? cost::RouterWeights::Shallow
             : cfg.router.kind == RouterKind::InputMlp  ? cost::RouterWeights::Deep
                                                        : cost::RouterWeights::None;
  a.router_mlp_hidden = static_cast<double>(cfg.router.mlp_hidden);
  return a;
}

// Per-token document ids and padding flags; empty vectors mean one document, no padding.
struct SequenceMeta {
  std::vector<long> doc_ids;
  std::vector<bool> padding;

  long doc(std::size_t t) const { return doc_ids.empty() ? 0 : doc_ids[t]; }
  bool pad(std::size_t t) const { return !padding.empty() && padding[t]; }
};

struct LayerTrace {
  std::vector<std::vector<RnnScalars>> scalars;  // [t][h_rnn]
  std::vector<std::vector<Vec>> kv_q, kv_k, kv_v;  // [t][h_kv], after conv, norm and RoPE
  std::vector<std::vector<Vec>> o_rnn, o_kv;       // [t][head], before normalization
  std::vector<Vec> g_rnn, g_kv;                    // [t][head]
};

struct LayerOutput {
  std::vector<Vec> outputs;
  std::vector<RoutingDecision> decisions;
  KvCache cache;
  double rho_kv = 0.0;
  LayerTrace trace;
};

namespace detail {

inline std::vector<Vec> split_heads(std::span<const double> x, std::size_t heads) {
  const std::size_t w = x.size() / heads;
  std::vector<Vec> out(heads);
  for (std::size_t h = 0; h < heads; ++h) out[h].assign(x.begin() + h * w, x.begin() + (h + 1) * w);
  return out;
}

// Per-head RMS normalization with a full-width gain vector.
inline std::vector<Vec> head_rms(std::span<const double> x, std::span<const double> gain,
                                 std::size_t heads, double eps) {
  const std::size_t w = x.size() / heads;
  std::vector<Vec> out(heads);
  for (std::size_t h = 0; h < heads; ++h)
    out[h] = rms_norm(x.subspan(h * w, w), gain.subspan(h * w, w), eps);
  return out;
}

inline void require_finite(std::span<const double> x, const char* what, std::size_t t) {
  if (!all_finite(x)) throw NumericError(std::string("non-finite ") + what, t);
}

// Contiguous runs of equal document id; a document may not reappear later.
inline std::vector<std::pair<std::size_t, std::size_t>> doc_segments(const SequenceMeta& m,
                                                                     std::size_t T) {
  std::vector<std::pair<std::size_t, std::size_t>> seg;
  std::vector<long> seen;
  std::size_t start = 0;
  for (std::size_t t = 1; t <= T; ++t) {
    if (t == T || m.doc(t) != m.doc(start)) {
      for (long s : seen)
        if (s == m.doc(start)) throw ConfigError("forward: document ids must be contiguous");
      seen.push_back(m.doc(start));
      seg.emplace_back(start, t);
      start = t;
    }
  }
  return seg;
}

inline std::vector<Vec> conv_segments(const std::vector<Vec>& seq, const Matrix& kernel,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& seg) {
  std::vector<Vec> out;
  out.reserve(seq.size());
  for (auto [a, b] : seg) {
    std::vector<Vec> part(seq.begin() + a, seq.begin() + b);
    for (auto& y : causal_depthwise_conv(part, kernel)) out.push_back(std::move(y));
  }
  return out;
}

}  // namespace detail

// Full layer forward. `prev_scores` carries each token's routing score from
// the previous layer for cross-layer averaging.
inline LayerOutput forward(const std::vector<Vec>& X, const LayerWeights& w, const LayerConfig& cfg,
                           const SequenceMeta& meta = {},
                           const std::vector<double>* prev_scores = nullptr) {
  cfg.validate();
  const std::size_t T = X.size();
  if (T == 0) throw DimensionError("forward: empty sequence");
  if ((!meta.doc_ids.empty() && meta.doc_ids.size() != T) ||
      (!meta.padding.empty() && meta.padding.size() != T))
    throw DimensionError("forward: metadata length != T");
  if (prev_scores && prev_scores->size() != T) throw DimensionError("forward: prev_scores length");
  const std::size_t H = cfg.h_rnn(), HK = cfg.h_kv();
  const double eps = cfg.norm_eps;
  // A fixed tau wins; otherwise a learnable threshold reads its logit from the weights.
  double tau = cfg.tau_value();
  if (!cfg.tau && cfg.learnable_threshold) {
    detail::require_dims(w.threshold_logit.size() == 1, "forward: missing threshold logit");
    tau = effective_threshold({w.threshold_logit[0], cfg.threshold.scale_s});
  }

  std::vector<Vec> xn(T), q(T), k(T), v(T);
  for (std::size_t t = 0; t < T; ++t) {
    detail::require_dims(X[t].size() == cfg.d_hidden, "forward: row width != d_hidden");
    detail::require_finite(X[t], "input", t);
    xn[t] = rms_norm(X[t], w.prenorm, eps);
    q[t] = matvec(xn[t], w.w_q);
    k[t] = matvec(xn[t], w.w_k);
    v[t] = matvec(xn[t], w.w_v);
    detail::require_finite(q[t], "projection", t);
    detail::require_finite(k[t], "projection", t);
    detail::require_finite(v[t], "projection", t);
  }

  // Conv windows and recurrent state both restart at document boundaries.
  const auto seg = detail::doc_segments(meta, T);
  const auto rq = detail::conv_segments(q, w.rnn_conv_q, seg);
  const auto rk = detail::conv_segments(k, w.rnn_conv_k, seg);
  const auto rv = detail::conv_segments(v, w.rnn_conv_v, seg);
  const auto cq = detail::conv_segments(q, w.kv_conv_q, seg);
  const auto ck = detail::conv_segments(k, w.kv_conv_k, seg);
  const auto cv = detail::conv_segments(v, w.kv_conv_v, seg);

  LayerOutput out;
  LayerTrace& tr = out.trace;
  tr.scalars.resize(T);
  tr.kv_q.resize(T);
  tr.kv_k.resize(T);
  tr.kv_v.resize(T);
  tr.o_rnn.resize(T);
  tr.o_kv.resize(T);
  tr.g_rnn.resize(T);
  tr.g_kv.resize(T);

  RecurrenceInputs rin;
  rin.queries.resize(T);
  rin.keys.resize(T);
  rin.values.resize(T);
  rin.scalars.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    rin.queries[t] = detail::head_rms(rq[t], w.rnn_norm_q, H, eps);
    rin.keys[t] = detail::head_rms(rk[t], w.rnn_norm_k, H, eps);
    rin.values[t] = detail::head_rms(rv[t], w.rnn_norm_v, H, eps);
    if (cfg.l2_normalize_qk) {
      for (auto& x : rin.queries[t]) x = l2_normalized(x);
      for (auto& x : rin.keys[t]) x = l2_normalized(x);
    }
    rin.scalars[t] = gdn_scalars(xn[t], w.scalars);
    tr.scalars[t] = rin.scalars[t];

    auto kq = detail::head_rms(cq[t], w.kv_norm_q, HK, eps);
    auto kk = detail::head_rms(ck[t], w.kv_norm_k, HK, eps);
    for (auto& x : kq) x = rope_apply(x, t, cfg.rope_base);
    for (auto& x : kk) x = rope_apply(x, t, cfg.rope_base);
    tr.kv_q[t] = std::move(kq);
    tr.kv_k[t] = std::move(kk);
    tr.kv_v[t] = detail::head_rms(cv[t], w.kv_norm_v, HK, eps);
  }

  // Recurrence, one document at a time from a zero state.
  std::vector<Vec> errors(T);
  for (auto [a, b] : seg) {
    RecurrenceInputs part;
    part.queries.assign(rin.queries.begin() + a, rin.queries.begin() + b);
    part.keys.assign(rin.keys.begin() + a, rin.keys.begin() + b);
    part.values.assign(rin.values.begin() + a, rin.values.begin() + b);
    part.scalars.assign(rin.scalars.begin() + a, rin.scalars.begin() + b);
    std::vector<RnnHeadState> s0(H, RnnHeadState::zeros(cfg.rnn_qk_head, cfg.rnn_v_head));
    RecurrenceOutputs r = cfg.chunked ? run_chunked(part, std::move(s0), {cfg.chunk}, cfg.error_eps)
                                      : run_sequential(part, std::move(s0), cfg.error_eps);
    for (std::size_t i = 0; i < b - a; ++i) {
      tr.o_rnn[a + i] = std::move(r.outputs[i]);
      errors[a + i] = std::move(r.errors[i]);
      for (const auto& o : tr.o_rnn[a + i]) detail::require_finite(o, "recurrent output", a + i);
    }
  }

  out.cache = KvCache(HK, cfg.kv_qk_head, cfg.kv_v_head);
  out.decisions.resize(T);
  out.outputs.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec scores = cfg.router.learned() ? route_input(xn[t], w.router, H) : errors[t];
    std::optional<double> prev;
    if (prev_scores) prev = (*prev_scores)[t];
    RoutingDecision dec = decide(std::move(scores), cfg.router, tau, prev);
    if (meta.pad(t)) dec.selected = false;

    std::vector<Vec> vals = tr.kv_v[t];
    if (cfg.router.attach_enabled())
      for (auto& x : vals) x = attach_score(x, dec.attach);
    append_if_selected(out.cache, t, meta.doc(t), tr.kv_k[t], std::move(vals), dec.selected);
    tr.o_kv[t] = sparse_attend(tr.kv_q[t], out.cache, {t, meta.doc(t)});

    Vec gr = matvec(xn[t], w.gate_rnn);
    Vec gk = matvec(xn[t], w.gate_kv);
    for (double& g : gr) g = sigmoid(g);
    for (double& g : gk) g = sigmoid(g);
    const Vec gate_pre = matvec(xn[t], w.norm_gate);

    Vec mix(cfg.d_v, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * cfg.rnn_v_head;
      const Vec o = gated_rms_norm(tr.o_rnn[t][h], w.rnn_out_norm,
                                   std::span<const double>(gate_pre).subspan(off, cfg.rnn_v_head), eps);
      for (std::size_t j = 0; j < o.size(); ++j) mix[off + j] = gr[h] * o[j];
    }
    for (std::size_t h = 0; h < HK; ++h) {
      const std::size_t off = h * cfg.kv_v_head;
      const Vec o = rms_norm(tr.o_kv[t][h], w.kv_out_norm, eps);
      for (std::size_t j = 0; j < o.size(); ++j) mix[off + j] += gk[h] * o[j];
    }
    out.outputs[t] = matvec(mix, w.w_o);
    detail::require_finite(out.outputs[t], "layer output", t);
    tr.g_rnn[t] = std::move(gr);
    tr.g_kv[t] = std::move(gk);
    out.decisions[t] = std::move(dec);
  }
  out.rho_kv = usage(out.cache, T);
  return out;
}

// ------------------------------------------------------------------ FFN, stack

struct FfnWeights {
  Vec prenorm;
  Matrix w_gate;  // (d, d_int)
  Matrix w_up;    // (d, d_int)
  Matrix w_down;  // (d_int, d)

  std::size_t parameter_count() const {
    return prenorm.size() + w_gate.size() + w_up.size() + w_down.size();
  }
};

inline FfnWeights init_ffn(std::size_t d, std::size_t d_int, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return {Vec(d, 1.0), detail::gaussian(d, d_int, rng, scale), detail::gaussian(d, d_int, rng, scale),
          detail::gaussian(d_int, d, rng, scale)};
}

// W_down (silu(W_gate x) * W_up x); no biases, no normalization.
inline Vec ffn_swiglu(std::span<const double> x, const FfnWeights& f) {
  detail::require_dims(f.w_gate.cols() == f.w_up.cols() && f.w_down.rows() == f.w_gate.cols(),
                       "ffn_swiglu: inner width mismatch");
  Vec g = matvec(x, f.w_gate);
  const Vec u = matvec(x, f.w_up);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = silu(g[i]) * u[i];
  return matvec(g, f.w_down);
}

struct StackLayer {
  LayerConfig cfg;
  LayerWeights ham;
  FfnWeights ffn;
};

struct StackOutput {
  std::vector<LayerOutput> layers;
  std::vector<Vec> hidden;
  double rho_global = 0.0;  // mean over layers of T_KV / T
};

// x <- x + HAM(x); x <- x + FFN(norm(x)). The HAM layer applies its own pre-norm.
// `thresholds`, when given, fixes tau per layer.
inline StackOutput stack_forward(const std::vector<StackLayer>& layers, std::vector<Vec> X,
                                 const SequenceMeta& meta = {},
                                 const std::vector<double>* thresholds = nullptr) {
  if (layers.empty()) throw ConfigError("stack_forward: no layers");
  if (thresholds && thresholds->size() != layers.size())
    throw ConfigError("stack_forward: one threshold per layer required");
  StackOutput so;
  std::vector<double> prev;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const StackLayer& L = layers[l];
    if (L.cfg.d_hidden != layers[0].cfg.d_hidden) throw ConfigError("stack_forward: width mismatch");
    LayerConfig cfg = L.cfg;
    if (thresholds) cfg.tau = (*thresholds)[l];
    LayerOutput lo = forward(X, L.ham, cfg, meta, l > 0 && cfg.router.eda_enabled ? &prev : nullptr);
    prev.resize(X.size());
    for (std::size_t t = 0; t < X.size(); ++t) {
      prev[t] = lo.decisions[t].score;
      for (std::size_t j = 0; j < X[t].size(); ++j) X[t][j] += lo.outputs[t][j];
      const Vec f = ffn_swiglu(rms_norm(X[t], L.ffn.prenorm, cfg.norm_eps), L.ffn);
      for (std::size_t j = 0; j < X[t].size(); ++j) X[t][j] += f[j];
      detail::require_finite(X[t], "residual stream", t);
    }
    so.rho_global += lo.rho_kv / static_cast<double>(layers.size());
    so.layers.push_back(std::move(lo));
  }
  so.hidden = std::move(X);
  return so;
}

}  // namespace ham
