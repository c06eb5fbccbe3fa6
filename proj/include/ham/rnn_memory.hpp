// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Matrix-valued associative memory: linear attention, delta rule and gated
// delta rule updates, with sequential and chunk-parallel execution.
//
// State layout: S is (d_k, d_v) and readout(S, q) = S^T q = sum_i (q . k_i) v_i,
// so writing a pair adds outer(k, v). No transposes appear anywhere else.

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ham/core_math.hpp"

namespace ham {

struct RnnHeadState {
  Matrix S;

  static RnnHeadState zeros(std::size_t d_k, std::size_t d_v) { return {Matrix(d_k, d_v, 0.0)}; }
  std::size_t d_k() const { return S.rows(); }
  std::size_t d_v() const { return S.cols(); }
};

// alpha: decay of the previous state; beta: write strength.
struct RnnScalars {
  double alpha = 1.0;
  double beta = 0.0;
};

// Per-head projections producing (alpha, beta) from the layer input.
struct RnnScalarParams {
  Matrix a_proj;  // (d_hidden, heads)
  Matrix b_proj;  // (d_hidden, heads)
  Vec A_log;      // (heads)
  Vec dt_bias;    // (heads)

  std::size_t heads() const { return A_log.size(); }
};

struct ChunkConfig {
  std::size_t size = 64;
};

inline Vec readout(const RnnHeadState& st, std::span<const double> q) {
  detail::require_dims(q.size() == st.d_k(), "readout: query length != d_k");
  Vec out(st.d_v(), 0.0);
  for (std::size_t i = 0; i < st.d_k(); ++i) {
    const double qi = q[i];
    const auto r = st.S.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += qi * r[j];
  }
  return out;
}

inline RnnHeadState la_update(RnnHeadState st, std::span<const double> k,
                              std::span<const double> v) {
  detail::require_dims(k.size() == st.d_k() && v.size() == st.d_v(),
                       "la_update: key/value length mismatch");
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) st.S(i, j) += k[i] * v[j];
  return st;
}

namespace detail {

// S' = alpha S (I - beta k k^T) + beta v k^T, evaluated as
// S' = alpha S + k u^T with u = beta (v - alpha S^T k). `pred` receives S^T k.
inline RnnHeadState gated_delta_step(RnnHeadState st, std::span<const double> k,
                                     std::span<const double> v, double alpha, double beta,
                                     Vec* pred_out = nullptr) {
  require_dims(k.size() == st.d_k() && v.size() == st.d_v(),
               "delta update: key/value length mismatch");
  Vec pred = readout(st, k);
  Vec u(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) u[j] = beta * (v[j] - alpha * pred[j]);
  for (std::size_t i = 0; i < k.size(); ++i) {
    auto r = st.S.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) r[j] = alpha * r[j] + k[i] * u[j];
  }
  if (pred_out) *pred_out = std::move(pred);
  return st;
}

}  // namespace detail

// One gradient step of 0.5 |S^T k - v|^2 with step size beta.
inline RnnHeadState delta_update(RnnHeadState st, std::span<const double> k,
                                 std::span<const double> v, double beta) {
  return detail::gated_delta_step(std::move(st), k, v, 1.0, beta);
}

inline RnnHeadState gdn_update(RnnHeadState st, std::span<const double> k,
                               std::span<const double> v, RnnScalars sc) {
  return detail::gated_delta_step(std::move(st), k, v, sc.alpha, sc.beta);
}

// beta_h = sigmoid(b_h . x); alpha_h = exp(-exp(A_log_h) * softplus(a_h . x + dt_bias_h)).
inline std::vector<RnnScalars> gdn_scalars(std::span<const double> x, const RnnScalarParams& p) {
  detail::require_dims(x.size() == p.a_proj.rows() && x.size() == p.b_proj.rows(),
                       "gdn_scalars: input length != projection rows");
  detail::require_dims(p.a_proj.cols() == p.heads() && p.b_proj.cols() == p.heads() &&
                           p.dt_bias.size() == p.heads(),
                       "gdn_scalars: head count mismatch");
  const Vec a = matvec(x, p.a_proj);
  const Vec b = matvec(x, p.b_proj);
  std::vector<RnnScalars> out(p.heads());
  for (std::size_t h = 0; h < p.heads(); ++h) {
    out[h].beta = sigmoid(b[h]);
    out[h].alpha = std::exp(-std::exp(p.A_log[h]) * softplus(a[h] + p.dt_bias[h]));
  }
  return out;
}

// Cosine distance between the state's prediction for k and the true value;
// evaluated on the state before the step that writes (k, v).
inline double prediction_error(const RnnHeadState& st, std::span<const double> k,
                               std::span<const double> v, double eps = 1e-8) {
  return cosine_distance(readout(st, k), v, eps);
}

// Per-step, per-head inputs: queries[t][h], keys[t][h], values[t][h], scalars[t][h].
struct RecurrenceInputs {
  std::vector<std::vector<Vec>> queries;
  std::vector<std::vector<Vec>> keys;
  std::vector<std::vector<Vec>> values;
  std::vector<std::vector<RnnScalars>> scalars;

  std::size_t steps() const { return keys.size(); }
};

struct RecurrenceOutputs {
  std::vector<std::vector<Vec>> outputs;  // [t][h], readout after the step-t write
  std::vector<Vec> errors;                // [t][h], prediction error before the step-t write
  std::vector<RnnHeadState> final_states;
};

namespace detail {

inline void check_recurrence(const RecurrenceInputs& in, const std::vector<RnnHeadState>& s0) {
  const std::size_t T = in.steps();
  require_dims(in.queries.size() == T && in.values.size() == T && in.scalars.size() == T,
               "recurrence: sequence lengths differ");
  for (std::size_t t = 0; t < T; ++t) {
    require_dims(in.queries[t].size() == s0.size() && in.keys[t].size() == s0.size() &&
                     in.values[t].size() == s0.size() && in.scalars[t].size() == s0.size(),
                 "recurrence: head count mismatch");
    for (std::size_t h = 0; h < s0.size(); ++h) {
      require_dims(in.queries[t][h].size() == s0[h].d_k() && in.keys[t][h].size() == s0[h].d_k() &&
                       in.values[t][h].size() == s0[h].d_v(),
                   "recurrence: per-head dimension mismatch");
    }
  }
}

inline RecurrenceOutputs empty_outputs(std::size_t T, std::size_t H) {
  RecurrenceOutputs out;
  out.outputs.assign(T, std::vector<Vec>(H));
  out.errors.assign(T, Vec(H, 0.0));
  return out;
}

}  // namespace detail

// Fused recurrent form: e_t from S_{t-1}, then S_t = gdn_update, then o_t = readout(S_t, q_t).
inline RecurrenceOutputs run_sequential(const RecurrenceInputs& in,
                                        std::vector<RnnHeadState> state, double eps = 1e-8) {
  detail::check_recurrence(in, state);
  const std::size_t T = in.steps();
  const std::size_t H = state.size();
  RecurrenceOutputs out = detail::empty_outputs(T, H);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < H; ++h) {
      const auto& sc = in.scalars[t][h];
      Vec pred;
      state[h] = detail::gated_delta_step(std::move(state[h]), in.keys[t][h], in.values[t][h],
                                          sc.alpha, sc.beta, &pred);
      out.errors[t][h] = cosine_distance(pred, in.values[t][h], eps);
      out.outputs[t][h] = readout(state[h], in.queries[t][h]);
    }
  }
  out.final_states = std::move(state);
  return out;
}

namespace detail {

// Processes tokens [t0, t1) of one head against start state `st` using the
// UT/WY form of the gated delta rule:
//   u_t = beta_t (v_t - g_t S0^T k_t - sum_{s<t} D(t,s) (k_t . k_s) u_s)
//   S_t = g_t S0 + sum_{s<=t} D(t,s) k_s u_s^T
// where D(t,s) = prod_{s<r<=t} alpha_r and g_t = D(t, start). The lower
// triangular system for u is solved by forward substitution.
inline void gated_delta_chunk(const RecurrenceInputs& in, std::size_t h, std::size_t t0,
                              std::size_t t1, RnnHeadState& st, RecurrenceOutputs& out,
                              double eps) {
  const std::size_t n = t1 - t0;
  const std::size_t dk = st.d_k();
  const std::size_t dv = st.d_v();
  auto key = [&](std::size_t i) -> const Vec& { return in.keys[t0 + i][h]; };

  // decay[i][s + 1] = prod_{s<r<=i} alpha_r (s = -1 encodes the chunk start).
  std::vector<Vec> decay(n, Vec(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double a = in.scalars[t0 + i][h].alpha;
    decay[i][i + 1] = 1.0;
    for (std::size_t s = 0; s <= i; ++s) decay[i][s] = (i == 0 ? 1.0 : decay[i - 1][s]) * a;
  }
  // Key Gram matrix within the chunk.
  std::vector<Vec> gram(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < i; ++s) gram[i][s] = dot(key(i), key(s));

  std::vector<Vec> start_pred(n);
  for (std::size_t i = 0; i < n; ++i) start_pred[i] = readout(st, key(i));

  std::vector<Vec> u(n, Vec(dv, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = in.scalars[t0 + i][h].beta;
    const Vec& v = in.values[t0 + i][h];
    Vec acc(dv);
    for (std::size_t j = 0; j < dv; ++j) acc[j] = decay[i][0] * start_pred[i][j];
    for (std::size_t s = 0; s < i; ++s) {
      const double c = decay[i][s + 1] * gram[i][s];
      for (std::size_t j = 0; j < dv; ++j) acc[j] += c * u[s][j];
    }
    for (std::size_t j = 0; j < dv; ++j) u[i][j] = beta * (v[j] - acc[j]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    // Prediction from S_{t-1}: decay up to step i-1.
    Vec pred(dv);
    const double g_prev = i == 0 ? 1.0 : decay[i - 1][0];
    for (std::size_t j = 0; j < dv; ++j) pred[j] = g_prev * start_pred[i][j];
    for (std::size_t s = 0; s < i; ++s) {
      const double c = decay[i - 1][s + 1] * gram[i][s];
      for (std::size_t j = 0; j < dv; ++j) pred[j] += c * u[s][j];
    }
    out.errors[t0 + i][h] = cosine_distance(pred, in.values[t0 + i][h], eps);

    const Vec& q = in.queries[t0 + i][h];
    Vec o = readout(st, q);
    for (std::size_t j = 0; j < dv; ++j) o[j] *= decay[i][0];
    for (std::size_t s = 0; s <= i; ++s) {
      const double c = decay[i][s + 1] * dot(key(s), q);
      for (std::size_t j = 0; j < dv; ++j) o[j] += c * u[s][j];
    }
    out.outputs[t0 + i][h] = std::move(o);
  }

  Matrix next(dk, dv);
  const double g_end = decay[n - 1][0];
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t j = 0; j < dv; ++j) next(a, j) = g_end * st.S(a, j);
  for (std::size_t s = 0; s < n; ++s) {
    const double c = decay[n - 1][s + 1];
    const Vec& ks = key(s);
    for (std::size_t a = 0; a < dk; ++a) {
      const double w = c * ks[a];
      for (std::size_t j = 0; j < dv; ++j) next(a, j) += w * u[s][j];
    }
  }
  st.S = std::move(next);
}

}  // namespace detail

// Chunk-parallel form. A chunk holding a single token is the recurrent step
// itself, so C = 1 reproduces run_sequential exactly.
inline RecurrenceOutputs run_chunked(const RecurrenceInputs& in, std::vector<RnnHeadState> state,
                                     ChunkConfig cfg, double eps = 1e-8) {
  if (cfg.size < 1) throw ConfigError("run_chunked: chunk size must be >= 1");
  detail::check_recurrence(in, state);
  const std::size_t T = in.steps();
  const std::size_t H = state.size();
  RecurrenceOutputs out = detail::empty_outputs(T, H);
  for (std::size_t t0 = 0; t0 < T; t0 += cfg.size) {
    const std::size_t t1 = std::min(T, t0 + cfg.size);
    for (std::size_t h = 0; h < H; ++h) {
      if (t1 - t0 == 1) {
        const auto& sc = in.scalars[t0][h];
        Vec pred;
        state[h] = detail::gated_delta_step(std::move(state[h]), in.keys[t0][h], in.values[t0][h],
                                            sc.alpha, sc.beta, &pred);
        out.errors[t0][h] = cosine_distance(pred, in.values[t0][h], eps);
        out.outputs[t0][h] = readout(state[h], in.queries[t0][h]);
      } else {
        detail::gated_delta_chunk(in, h, t0, t1, state[h], out, eps);
      }
    }
  }
  out.final_states = std::move(state);
  return out;
}

struct Interference {
  Vec signal;
  Vec noise;
};

// Splits the linear-attention readout for q into the term carried by pair j
// and the crosstalk from every other stored pair.
inline Interference interference_decompose(const std::vector<std::pair<Vec, Vec>>& pairs,
                                           std::span<const double> q, std::size_t j) {
  if (j >= pairs.size()) throw std::out_of_range("interference_decompose: index out of range");
  const std::size_t dv = pairs[j].second.size();
  Interference r{Vec(dv, 0.0), Vec(dv, 0.0)};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    detail::require_dims(pairs[i].first.size() == q.size() && pairs[i].second.size() == dv,
                         "interference_decompose: pair dimension mismatch");
    const double w = dot(q, pairs[i].first);
    Vec& dst = i == j ? r.signal : r.noise;
    for (std::size_t c = 0; c < dv; ++c) dst[c] += w * pairs[i].second[c];
  }
  return r;
}

}  // namespace ham
