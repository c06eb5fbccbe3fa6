// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Analytical parameter, forward-FLOP and forward-memory accounting for HAM,
// Gated DeltaNet, Transformer and GDN with interleaved global attention.
//
// Two routes are kept apart on purpose:
//   Itemized   - one row per accounting-table row, summed over the layer stack
//   ClosedForm - the simplified polynomials in d under fixed aspect ratios
// Everything is in double so fractional head and layer counts are allowed.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ham/errors.hpp"

namespace ham::cost {

enum class Family { Ham, Gdn, Transformer, GdnGsa };
enum class Route { Itemized, ClosedForm };
enum class RouterWeights { None, Shallow, Deep };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Ham: return "HAM";
    case Family::Gdn: return "GDN";
    case Family::Transformer: return "Transformer";
    case Family::GdnGsa: return "GDN-GSA";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "ham" || s == "HAM") return Family::Ham;
  if (s == "gdn" || s == "GDN") return Family::Gdn;
  if (s == "transformer" || s == "tf" || s == "Transformer") return Family::Transformer;
  if (s == "gdn-gsa" || s == "gsa" || s == "GDN-GSA") return Family::GdnGsa;
  throw ConfigError("unknown family: " + s);
}

// Hidden size per layer of the reference 800M configurations.
inline constexpr double kAspectHam = 1792.0 / 24.0;
inline constexpr double kAspectTransformer = 1920.0 / 23.0;
inline constexpr double kZetta = 1e21;

inline double aspect_ratio(Family f) {
  return f == Family::Transformer ? kAspectTransformer : kAspectHam;
}

struct ArchConfig {
  Family family = Family::Ham;
  double d = 1792;
  double layers = 24;
  double vocab = 32000;
  double d_conv = 4;
  double chunk = 64;
  double gsa_k = 2;

  // HAM / GDN dims (GSA uses these for its recurrent layers).
  double d_qk = 1280;
  double d_v = 1920;
  double rnn_qk_head = 256;
  double rnn_v_head = 384;
  double kv_qk_head = 128;
  double kv_v_head = 192;
  // Transformer attention dims (also the GSA attention layers).
  double tf_d_kv = 1792;
  double tf_head = 128;
  double d_int = 2560;

  bool learnable_threshold = false;
  RouterWeights router = RouterWeights::None;
  double router_mlp_hidden = 256;

  double h_rnn() const { return d_qk / rnn_qk_head; }
  double h_kv() const { return d_qk / kv_qk_head; }
  double tf_heads() const { return d / tf_head; }

  // Dims from the architectural relations at hidden size d. `layers` defaults
  // to the exact (unrounded) aspect-ratio count.
  static ArchConfig from_hidden(Family f, double d, std::optional<double> layers = std::nullopt) {
    ArchConfig c;
    c.family = f;
    c.d = d;
    c.layers = layers.value_or(d / aspect_ratio(f));
    c.d_qk = 5.0 * d / 7.0;
    c.d_v = 15.0 * d / 14.0;
    c.tf_d_kv = d;
    // SwiGLU width: two thirds of r times d, so 10/7 d (r = 15/7) or 4/3 d (r = 2).
    c.d_int = f == Family::Transformer ? 4.0 * d / 3.0 : 10.0 * d / 7.0;
    return c;
  }

  void validate() const {
    if (!(d > 0) || layers < 0 || vocab < 0 || !(chunk > 0) || d_conv < 0)
      throw ConfigError("ArchConfig: nonpositive dimension");
    if (family == Family::GdnGsa) {
      if (!(gsa_k >= 1)) throw ConfigError("ArchConfig: GSA period must be >= 1");
      if (layers == std::floor(layers) && gsa_k == std::floor(gsa_k) &&
          std::fmod(layers, gsa_k) != 0.0)
        throw ConfigError("ArchConfig: GSA period must divide the layer count");
    }
  }
};

struct CostRow {
  std::string table;
  std::string section;
  std::string name;
  double value;
};

inline double sum(const std::vector<CostRow>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += r.value;
  return s;
}

// ---------------------------------------------------------------- parameters

inline std::vector<CostRow> ham_layer_param_rows(const ArchConfig& c) {
  const double d = c.d, qk = c.d_qk, v = c.d_v, h = c.h_rnn(), hk = c.h_kv(), w = c.d_conv;
  double router = 0.0;
  if (c.router == RouterWeights::Shallow) router = d;
  if (c.router == RouterWeights::Deep) {
    const double m = c.router_mlp_hidden;
    router = d * m + m + m * m + m + m + 1;
  }
  const std::string t = "HAM params";
  return {
      {t, "Pre-norm", "Pre-norm", d},
      {t, "Q, K, V projections", "W_Q, W_K", 2 * d * qk},
      {t, "Q, K, V projections", "W_V", d * v},
      {t, "RMS norms for Q, K, V", "RNN RMS norms", 2 * qk + v},
      {t, "RMS norms for Q, K, V", "KV RMS norms", 2 * qk + v},
      {t, "RNN scalars", "a, b projections", 2 * d * h},
      {t, "RNN scalars", "A_log", h},
      {t, "RNN scalars", "dt bias", h},
      {t, "1D convolutions", "W_RNN-Q conv, W_RNN-K conv", 2 * qk * w},
      {t, "1D convolutions", "W_RNN-V conv", v * w},
      {t, "1D convolutions", "W_KV-Q conv, W_KV-K conv", 2 * qk * w},
      {t, "1D convolutions", "W_KV-V conv", v * w},
      {t, "KV token selection", "tau (learnable threshold)", c.learnable_threshold ? 1.0 : 0.0},
      {t, "KV token selection", "W_router (learnable router)", router},
      {t, "Headwise output normalization", "RNN norm", c.rnn_v_head},
      {t, "Headwise output normalization", "RNN norm gate", d * v},
      {t, "Headwise output normalization", "KV norm", c.kv_v_head},
      {t, "RNN & KV gating", "Per-head RNN gate", d * h},
      {t, "RNN & KV gating", "Per-head KV gate", d * hk},
      {t, "Output projection", "Output projection", v * d},
  };
}

inline std::vector<CostRow> gdn_layer_param_rows(const ArchConfig& c) {
  const double d = c.d, qk = c.d_qk, v = c.d_v, h = c.h_rnn(), w = c.d_conv;
  const std::string t = "GDN params";
  return {
      {t, "Pre-norm", "Pre-norm", d},
      {t, "Q, K, V projections", "W_Q, W_K", 2 * d * qk},
      {t, "Q, K, V projections", "W_V", d * v},
      {t, "RNN scalars", "a, b projections", 2 * d * h},
      {t, "RNN scalars", "A_log", h},
      {t, "RNN scalars", "dt bias", h},
      {t, "1D convolutions", "W_Q conv, W_K conv", 2 * qk * w},
      {t, "1D convolutions", "W_V conv", v * w},
      {t, "Output gating", "Gate projection", d * v},
      {t, "Output gating", "Output norm", c.rnn_v_head},
      {t, "Output projection", "W_O", v * d},
  };
}

inline std::vector<CostRow> tf_layer_param_rows(const ArchConfig& c) {
  const double d = c.d, kv = c.tf_d_kv;
  const std::string t = "Transformer params";
  return {
      {t, "Pre-norm", "Pre-norm", d},
      {t, "Q, K, V projections", "W_Q", d * d},
      {t, "Q, K, V projections", "W_K", d * kv},
      {t, "Q, K, V projections", "W_V", d * kv},
      {t, "Output projection", "W_O", d * d},
  };
}

inline std::vector<CostRow> ffn_param_rows(const ArchConfig& c) {
  const double d = c.d, m = c.d_int;
  const std::string t = "FFN params";
  return {
      {t, "FFN projections", "Pre-norm", d},
      {t, "FFN projections", "Gate projection (W_gate)", d * m},
      {t, "FFN projections", "Up projection (W_up)", d * m},
      {t, "FFN projections", "Down projection (W_down)", m * d},
  };
}

// GSA stacks: the attention layers use the Transformer table at hidden size d
// and every layer uses the HAM-width FFN.
struct LayerSplit {
  double recurrent = 0;
  double attention = 0;
};

inline LayerSplit layer_split(const ArchConfig& c) {
  switch (c.family) {
    case Family::Ham:
    case Family::Gdn: return {c.layers, 0};
    case Family::Transformer: return {0, c.layers};
    case Family::GdnGsa: return {c.layers * (1.0 - 1.0 / c.gsa_k), c.layers / c.gsa_k};
  }
  return {};
}

inline std::vector<CostRow> scale_rows(std::vector<CostRow> rows, double n) {
  for (auto& r : rows) r.value *= n;
  return rows;
}

inline std::vector<CostRow> append(std::vector<CostRow> a, const std::vector<CostRow>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// All rows of the model total, each multiplied by its layer count.
inline std::vector<CostRow> param_rows(const ArchConfig& c) {
  c.validate();
  const LayerSplit n = layer_split(c);
  std::vector<CostRow> rows;
  if (c.family == Family::Ham) rows = scale_rows(ham_layer_param_rows(c), n.recurrent);
  if (c.family == Family::Gdn || c.family == Family::GdnGsa)
    rows = scale_rows(gdn_layer_param_rows(c), n.recurrent);
  if (n.attention > 0) rows = append(rows, scale_rows(tf_layer_param_rows(c), n.attention));
  rows = append(rows, scale_rows(ffn_param_rows(c), c.layers));
  rows.push_back({"Model", "Embeddings", "Embedding and LM head (2Vd)", 2 * c.vocab * c.d});
  rows.push_back({"Model", "Embeddings", "Final norm", c.d});
  return rows;
}

inline double params(const ArchConfig& c) { return sum(param_rows(c)); }

inline double ham_layer_params(const ArchConfig& c) { return sum(ham_layer_param_rows(c)); }

// Closed-form totals under the aspect-ratio layer counts.
inline double closed_params(Family f, double d, double k = 2) {
  switch (f) {
    case Family::Ham: return 48075.0 / 401408 * d * d * d + 72591.0 / 200704 * d * d + 448061.0 / 7 * d;
    case Family::Gdn: return 375.0 / 3136 * d * d * d + 33.0 / 112 * d * d + 7168703.0 / 112 * d;
    case Family::Transformer: return 23.0 / 240 * d * d * d + 23.0 / 960 * d * d + 64001.0 * d;
    case Family::GdnGsa:
      return (375 * k - 27) / (3136 * k) * d * d * d + (33 * k - 30) / (112 * k) * d * d +
             (7168703 * k - 591) / (112 * k) * d;
  }
  return 0;
}

inline double simplified_params(Family f, double d, double k = 2) { return closed_params(f, d, k); }

// ----------------------------------------------------------------- FLOPs

inline std::vector<CostRow> rnn_block_flop_rows(const std::string& t, double T, double d,
                                                double qk, double v, double vhead, double h,
                                                double C) {
  return {
      {t, "RNN scalars", "beta (from b proj)", 3 * T * d * h},
      {t, "RNN scalars", "g (from a proj & A_log)", 5 * T * d * h},
      {t, "Chunked delta rule", "g cumsum", h * T},
      {t, "Chunked delta rule", "Compute A", (T / C) * C * C * (2 * qk + 3.5 * h)},
      {t, "Chunked delta rule", "Invert A", (T / C) * h * C * C * C / 2},
      {t, "Chunked delta rule", "Recompute w, u", 2 * (T / C) * C * C * (qk + v)},
      {t, "Chunked delta rule", "Gated delta rule", 4 * T * qk * vhead},
      {t, "Chunked delta rule", "Output", 2 * T * (qk * vhead + C * (qk + v))},
  };
}

inline std::vector<CostRow> ham_layer_flop_rows(const ArchConfig& c, double T, double T_kv) {
  const double d = c.d, qk = c.d_qk, v = c.d_v, h = c.h_rnn(), hk = c.h_kv(), w = c.d_conv;
  const bool learned = c.router != RouterWeights::None;
  const std::string t = "HAM FLOPs";
  std::vector<CostRow> rows = {
      {t, "Pre-norm", "Pre-norm", 4 * T * d},
      {t, "Q, K, V projections", "W_Q, W_K", 4 * T * d * qk},
      {t, "Q, K, V projections", "W_V", 2 * T * d * v},
      {t, "RMS norms for Q, K, V", "RNN Q, K, V norms", 4 * T * (2 * qk + v)},
      {t, "RMS norms for Q, K, V", "KV Q, K, V norms", 4 * T * (2 * qk + v)},
      {t, "1D convolutions", "RNN Q, K, V conv", T * (2 * qk + v) * (2 * w + 3)},
      {t, "1D convolutions", "KV Q, K, V conv", T * (2 * qk + v) * (2 * w + 3)},
      {t, "KV token selection", "via RNN state", learned ? 0.0 : 12 * T * d},
      {t, "KV token selection", "via input", learned ? 2 * T * d : 0.0},
  };
  rows = append(rows, rnn_block_flop_rows("HAM FLOPs / RNN block", T, d, qk, v, c.rnn_v_head, h,
                                          c.chunk));
  const std::string k = "HAM FLOPs / KV block";
  rows = append(rows, {
                          {k, "Rotary positional encoding", "RoPE on Q, K", 4 * T * qk},
                          {k, "Attention", "QK^T (causal)", T * T_kv * qk},
                          {k, "Attention", "Softmax (causal)", 2 * T * T_kv * hk},
                          {k, "Attention", "Attn.V (causal)", T * T_kv * v},
                      });
  rows = append(rows, {
                          {t, "Headwise output normalization", "RNN norm", 4 * T * c.rnn_v_head},
                          {t, "Headwise output normalization", "RNN norm gate", 2 * T * d * v + T * v},
                          {t, "Headwise output normalization", "KV norm", 4 * T * c.kv_v_head},
                          {t, "RNN & KV gating", "Per-head RNN gate", 2 * T * d * h + T * v},
                          {t, "RNN & KV gating", "Per-head KV gate", 2 * T * d * hk + T * v},
                          {t, "Output projection", "Output projection", 2 * T * v * d},
                      });
  return rows;
}

inline std::vector<CostRow> gdn_layer_flop_rows(const ArchConfig& c, double T) {
  const double d = c.d, qk = c.d_qk, v = c.d_v, h = c.h_rnn(), w = c.d_conv;
  const std::string t = "GDN FLOPs";
  std::vector<CostRow> rows = {
      {t, "Pre-norm", "Pre-norm", 4 * T * d},
      {t, "Q, K, V projections", "W_Q, W_K", 4 * T * d * qk},
      {t, "Q, K, V projections", "W_V", 2 * T * d * v},
      {t, "RMS norms for Q, K, V", "Q, K, V norms", 4 * T * (2 * qk + v)},
      {t, "1D convolutions", "Q, K, V conv", T * (2 * qk + v) * (2 * w + 3)},
  };
  rows = append(rows, rnn_block_flop_rows(t, T, d, qk, v, c.rnn_v_head, h, c.chunk));
  rows = append(rows, {
                          {t, "Output gating", "Pre-gate norm", 4 * T * d},
                          {t, "Output gating", "Gate projection", 2 * T * d * v},
                          {t, "Output gating", "SiLU activation", 3 * T * v},
                          {t, "Output gating", "Fused norm + gate", 5 * T * v},
                          {t, "Output projection", "Output projection", 2 * T * v * d},
                          {t, "Output projection", "Final norm", 4 * T * d},
                      });
  return rows;
}

inline std::vector<CostRow> tf_layer_flop_rows(const ArchConfig& c, double T) {
  const double d = c.d, kv = c.tf_d_kv, h = c.tf_heads();
  const std::string t = "Transformer FLOPs";
  return {
      {t, "Pre-norm", "Pre-norm", 4 * T * d},
      {t, "Q, K, V projections", "W_Q", 2 * T * d * d},
      {t, "Q, K, V projections", "W_K", 2 * T * d * kv},
      {t, "Q, K, V projections", "W_V", 2 * T * d * kv},
      {t, "Rotary positional encoding", "RoPE on Q", 6 * T * d},
      {t, "Rotary positional encoding", "RoPE on K", 6 * T * kv},
      {t, "Attention", "QK^T (causal)", T * T * d},
      {t, "Attention", "Softmax (causal)", 2 * T * T * h},
      {t, "Attention", "Attn.V (causal)", T * T * d},
      {t, "Output projection", "W_O", 2 * T * d * d},
  };
}

inline std::vector<CostRow> ffn_flop_rows(const ArchConfig& c, double T) {
  const double d = c.d, m = c.d_int;
  const std::string t = "FFN FLOPs";
  return {
      {t, "FFN (SwiGLU)", "Gate projection (W_gate)", 2 * T * d * m},
      {t, "FFN (SwiGLU)", "Up projection (W_up)", 2 * T * d * m},
      {t, "FFN (SwiGLU)", "SiLU activation", 3 * T * m},
      {t, "FFN (SwiGLU)", "Gate . Up", T * m},
      {t, "FFN (SwiGLU)", "Down projection (W_down)", 2 * T * m * d},
  };
}

inline void check_tokens(double T, double T_kv) {
  if (!(T >= 1)) throw ConfigError("T must be >= 1");
  if (T_kv < 0 || T_kv > T) throw ConfigError("T_KV must lie in [0, T]");
}

inline std::vector<CostRow> flop_rows(const ArchConfig& c, double T, double T_kv = 0) {
  c.validate();
  check_tokens(T, T_kv);
  const LayerSplit n = layer_split(c);
  std::vector<CostRow> rows;
  if (c.family == Family::Ham) rows = scale_rows(ham_layer_flop_rows(c, T, T_kv), n.recurrent);
  if (c.family == Family::Gdn || c.family == Family::GdnGsa)
    rows = scale_rows(gdn_layer_flop_rows(c, T), n.recurrent);
  if (n.attention > 0) rows = append(rows, scale_rows(tf_layer_flop_rows(c, T), n.attention));
  rows = append(rows, scale_rows(ffn_flop_rows(c, T), c.layers));
  rows.push_back({"Model", "Embeddings", "LM head (4TVd)", 4 * T * c.vocab * c.d});
  rows.push_back({"Model", "Embeddings", "Final norm", 4 * T * c.d});
  return rows;
}

inline double closed_flops(Family f, double d, double T, double T_kv, double k = 2) {
  check_tokens(T, T_kv);
  switch (f) {
    case Family::Ham:
      return T * (375.0 / 1568 * d * d * d + 99417.0 / 3136 * d * d + 28713903.0 / 224 * d) +
             T * T_kv * (75.0 / 3136 * d * d + 15.0 / 56 * d);
    case Family::Gdn:
      return T * (12015.0 / 50176 * d * d * d + 4689327.0 / 401408 * d * d + 128004.0 * d);
    case Family::Transformer:
      return T * (23.0 / 120 * d * d * d + (23.0 / 90 + 989.0 / 40960 * T) * d * d + 128004.0 * d);
    case Family::GdnGsa:
      return T * ((12015 * k - 879) / (50176 * k) * d * d * d +
                  (10836 * T + 4689327 * k - 4572591) / (401408 * k) * d * d + 128004.0 * d);
  }
  return 0;
}

inline double forward_flops(const ArchConfig& c, double T, double T_kv = 0,
                            Route route = Route::Itemized) {
  if (route == Route::Itemized) return sum(flop_rows(c, T, T_kv));
  return closed_flops(c.family, c.d, T, T_kv, c.gsa_k);
}

// ---------------------------------------------------------------- memory

// Weights plus recurrent state plus KV cache, all at 2 bytes per scalar.
inline std::vector<CostRow> memory_rows(const ArchConfig& c, double T, double T_kv = 0) {
  c.validate();
  check_tokens(T, T_kv);
  const LayerSplit n = layer_split(c);
  const double state = c.d_qk * c.rnn_v_head;
  std::vector<CostRow> rows = {{"Memory", "Weights", "2P", 2 * params(c)}};
  switch (c.family) {
    case Family::Ham:
      rows.push_back({"Memory", "State", "RNN state", 2 * n.recurrent * state});
      rows.push_back({"Memory", "Cache", "KV cache", 2 * n.recurrent * T_kv * (c.d_qk + c.d_v)});
      break;
    case Family::Gdn:
      rows.push_back({"Memory", "State", "RNN state", 2 * n.recurrent * state});
      break;
    case Family::Transformer:
      rows.push_back({"Memory", "Cache", "KV cache", 2 * n.attention * T * (c.d + c.tf_d_kv)});
      break;
    case Family::GdnGsa:
      // The attention-layer cache is counted at HAM widths (d_QK + d_V).
      rows.push_back({"Memory", "State", "RNN state", 2 * n.recurrent * state});
      rows.push_back({"Memory", "Cache", "KV cache", 2 * n.attention * T * (c.d_qk + c.d_v)});
      break;
  }
  return rows;
}

inline double closed_memory(Family f, double d, double T, double T_kv, double k = 2) {
  check_tokens(T, T_kv);
  switch (f) {
    case Family::Ham:
      return 48075.0 / 200704 * d * d * d + 809871.0 / 100352 * d * d +
             75.0 / 1568 * T_kv * d * d + 896122.0 / 7 * d;
    case Family::Gdn: return 375.0 / 1568 * d * d * d + 3111.0 / 392 * d * d + 7168703.0 / 56 * d;
    case Family::Transformer: return 23.0 / 120 * d * d * d + 23.0 / 480 * (1 + T) * d * d + 128002.0 * d;
    case Family::GdnGsa:
      return (375 * k - 27) / (1568 * k) * d * d * d + (12444 * k - 12360 + 75 * T) / (1568 * k) * d * d +
             (7168703 * k - 591) / (56 * k) * d;
  }
  return 0;
}

inline double forward_memory(const ArchConfig& c, double T, double T_kv = 0,
                             Route route = Route::Itemized) {
  if (route == Route::Itemized) return sum(memory_rows(c, T, T_kv));
  return closed_memory(c.family, c.d, T, T_kv, c.gsa_k);
}

// ------------------------------------------------------- training, asymptotics

struct TrainingSetup {
  double T = 16384;
  double ranks = 32;
  double steps = 95367;
  double kv_fraction = 0.5;  // HAM only: T_KV = fraction * T for every step
};

inline double training_flops(const ArchConfig& c, const TrainingSetup& s,
                             Route route = Route::ClosedForm) {
  if (!(s.ranks > 0) || !(s.steps > 0)) throw ConfigError("ranks and steps must be positive");
  const double t_kv = c.family == Family::Ham ? s.kv_fraction * s.T : 0.0;
  return 3.0 * forward_flops(c, s.T, t_kv, route) * s.ranks * s.steps;
}

struct Asymptotic {
  double flops_per_token;
  double memory_bytes;
};

// Large-P approximations in the parameter count P (k = 2 for GSA).
inline Asymptotic asymptotic(Family f, double P, double T, double T_kv) {
  const double p23 = std::cbrt(P) * std::cbrt(P);
  const double p13 = std::cbrt(P);
  const double K = 1000.0;
  switch (f) {
    case Family::Ham:
      return {2 * P + (130 + 0.1 * T_kv) * p23 - 8.5 * K * T_kv,
              2 * P + T_kv * (0.208 * p23 - 13 * p13 - 11.4 * K)};
    case Family::Gdn: return {2 * P + 46 * p23, 2 * P + 30 * p23};
    case Family::Transformer: return {2 * P + T * (0.115 * p23 - 11 * K), 2 * P + T * (0.23 * p23 - 21 * K)};
    case Family::GdnGsa:
      return {2 * P + T * (0.06 * p23 - 4 * p13 - 3.3 * K), 2 * P + T * (0.107 * p23 - 7 * p13 - 5.9 * K)};
  }
  return {0, 0};
}

// Positive root of closed_params(d) = P by bracketing bisection.
inline double solve_d_for_params(Family f, double P, double k = 2) {
  if (!(P > 0)) throw ConfigError("solve_d_for_params: target must be positive");
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (closed_params(f, hi, k) < P) {
    hi *= 2.0;
    if (++grow > 200) throw ConfigError("solve_d_for_params: no bracket");
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double pm = closed_params(f, mid, k);
    if (std::abs(pm - P) <= 1e-12 * P) return mid;
    (pm < P ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ham::cost
