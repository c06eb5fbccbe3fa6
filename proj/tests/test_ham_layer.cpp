// Copyright 2026 The HAM Authors. Apache 2.0 License.
#include <gtest/gtest.h>

#include <random>

#include "ham/ham_layer.hpp"

using namespace ham;

namespace {

LayerConfig small_cfg() {
  LayerConfig c;
  c.d_hidden = 16;
  c.d_qk = 8;
  c.d_v = 12;
  c.rnn_qk_head = 4;
  c.rnn_v_head = 6;
  c.kv_qk_head = 2;
  c.kv_v_head = 3;
  c.d_int = 20;
  c.chunk = 4;
  c.validate();
  return c;
}

std::vector<Vec> random_inputs(std::size_t T, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0, 1);
  std::vector<Vec> X(T, Vec(d));
  for (auto& x : X)
    for (double& v : x) v = N(rng);
  return X;
}

// Recurrent-only layer output assembled directly from the primitives.
std::vector<Vec> rnn_only_oracle(const std::vector<Vec>& X, const LayerWeights& w, const LayerConfig& c) {
  const std::size_t T = X.size(), H = c.h_rnn(), dk = c.rnn_qk_head, dv = c.rnn_v_head;
  std::vector<Vec> xn, q, k, v;
  for (const auto& x : X) {
    xn.push_back(rms_norm(x, w.prenorm, c.norm_eps));
    q.push_back(matvec(xn.back(), w.w_q));
    k.push_back(matvec(xn.back(), w.w_k));
    v.push_back(matvec(xn.back(), w.w_v));
  }
  q = causal_depthwise_conv(q, w.rnn_conv_q);
  k = causal_depthwise_conv(k, w.rnn_conv_k);
  v = causal_depthwise_conv(v, w.rnn_conv_v);
  std::vector<RnnHeadState> S(H, RnnHeadState::zeros(dk, dv));
  std::vector<Vec> out;
  for (std::size_t t = 0; t < T; ++t) {
    const auto sc = gdn_scalars(xn[t], w.scalars);
    const Vec gr = matvec(xn[t], w.gate_rnn), gp = matvec(xn[t], w.norm_gate);
    Vec mix(c.d_v, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      auto part = [&](const Vec& z, const Vec& g, std::size_t n) {
        return rms_norm(std::span<const double>(z).subspan(h * n, n),
                        std::span<const double>(g).subspan(h * n, n), c.norm_eps);
      };
      const Vec qh = l2_normalized(part(q[t], w.rnn_norm_q, dk));
      const Vec kh = l2_normalized(part(k[t], w.rnn_norm_k, dk));
      const Vec vh = part(v[t], w.rnn_norm_v, dv);
      S[h] = gdn_update(std::move(S[h]), kh, vh, sc[h]);
      const Vec o = gated_rms_norm(readout(S[h], qh), w.rnn_out_norm,
                                   std::span<const double>(gp).subspan(h * dv, dv), c.norm_eps);
      for (std::size_t j = 0; j < dv; ++j) mix[h * dv + j] = sigmoid(gr[h]) * o[j];
    }
    out.push_back(matvec(mix, w.w_o));
  }
  return out;
}

}  // namespace

TEST(LayerConfig, FromHiddenReferenceWidth) {
  const LayerConfig c = LayerConfig::from_hidden(1792);
  EXPECT_EQ(c.d_qk, 1280u);
  EXPECT_EQ(c.d_v, 1920u);
  EXPECT_EQ(c.h_rnn(), 5u);
  EXPECT_EQ(c.h_kv(), 10u);
  EXPECT_EQ(c.d_int, 2560u);
  EXPECT_THROW(LayerConfig::from_hidden(100), ConfigError);
}

TEST(LayerConfig, RejectsInconsistentHeads) {
  LayerConfig c = small_cfg();
  c.kv_v_head = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.router.eda_gamma = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(LayerWeights, ParameterCountMatchesCostModel) {
  for (auto kind : {RouterKind::PredictionError, RouterKind::InputLinear, RouterKind::InputMlp}) {
    for (bool thr : {false, true}) {
      LayerConfig c = small_cfg();
      c.router.kind = kind;
      c.router.mlp_hidden = 5;
      c.learnable_threshold = thr;
      const LayerWeights w = init_weights(c, 1);
      EXPECT_EQ(static_cast<double>(w.parameter_count()), cost::ham_layer_params(arch_config(c)));
    }
  }
}

TEST(LayerWeights, DeterministicInit) {
  const LayerConfig c = small_cfg();
  const LayerWeights a = init_weights(c, 42), b = init_weights(c, 42), z = init_weights(c, 43);
  EXPECT_EQ(a.w_q, b.w_q);
  EXPECT_EQ(a.w_o, b.w_o);
  EXPECT_FALSE(a.w_q == z.w_q);
}

TEST(Forward, Deterministic) {
  const LayerConfig c = small_cfg();
  const auto X = random_inputs(10, 16, 1);
  const auto a = forward(X, init_weights(c, 3), c), b = forward(X, init_weights(c, 3), c);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.rho_kv, b.rho_kv);
}

TEST(Forward, ShapesAndDimensionErrors) {
  const LayerConfig c = small_cfg();
  const LayerWeights w = init_weights(c, 1);
  const auto out = forward(random_inputs(7, 16, 2), w, c);
  ASSERT_EQ(out.outputs.size(), 7u);
  EXPECT_EQ(out.outputs[0].size(), 16u);
  EXPECT_EQ(out.decisions[0].head_scores.size(), c.h_rnn());
  EXPECT_THROW(forward(random_inputs(3, 15, 2), w, c), DimensionError);
  EXPECT_THROW(forward({}, w, c), DimensionError);
}

TEST(Forward, ThresholdAboveRangeIsRecurrentOnly) {
  LayerConfig c = small_cfg();
  c.tau = 2.5;
  const LayerWeights w = init_weights(c, 5);
  const auto X = random_inputs(12, 16, 6);
  const auto out = forward(X, w, c);
  EXPECT_EQ(out.cache.size(), 0u);
  EXPECT_EQ(out.rho_kv, 0.0);
  EXPECT_EQ(out.outputs, rnn_only_oracle(X, w, c));
}

TEST(Forward, ZeroThresholdAttendsDensely) {
  LayerConfig c = small_cfg();
  c.tau = 0.0;
  const auto out = forward(random_inputs(9, 16, 7), init_weights(c, 8), c);
  EXPECT_EQ(out.rho_kv, 1.0);
  const auto& tr = out.trace;
  for (std::size_t t = 0; t < 9; ++t) {
    for (std::size_t h = 0; h < c.h_kv(); ++h) {
      Vec w(t + 1);
      double mx = -1e300, z = 0;
      for (std::size_t i = 0; i <= t; ++i) {
        w[i] = dot(tr.kv_q[t][h], tr.kv_k[i][h]) / std::sqrt(2.0);
        mx = std::max(mx, w[i]);
      }
      for (double& x : w) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < c.kv_v_head; ++j) {
        double o = 0;
        for (std::size_t i = 0; i <= t; ++i) o += w[i] / z * tr.kv_v[i][h][j];
        EXPECT_NEAR(tr.o_kv[t][h][j], o, 1e-10);
      }
    }
  }
}

TEST(Forward, ZeroGateProjectionsGiveHalf) {
  const LayerConfig c = small_cfg();
  LayerWeights w = init_weights(c, 9);
  w.gate_rnn = Matrix(16, c.h_rnn(), 0.0);
  w.gate_kv = Matrix(16, c.h_kv(), 0.0);
  const auto out = forward(random_inputs(4, 16, 10), w, c);
  for (const auto& g : out.trace.g_rnn) EXPECT_EQ(g, Vec(c.h_rnn(), 0.5));
  for (const auto& g : out.trace.g_kv) EXPECT_EQ(g, Vec(c.h_kv(), 0.5));
}

TEST(Forward, Causal) {
  LayerConfig c = small_cfg();
  c.tau = 0.6;
  const LayerWeights w = init_weights(c, 11);
  const auto X = random_inputs(10, 16, 12);
  const auto base = forward(X, w, c);
  for (std::size_t s : {0u, 4u, 8u}) {
    auto Y = X;
    const auto noise = random_inputs(10, 16, 100 + s);
    for (std::size_t t = s + 1; t < 10; ++t) Y[t] = noise[t];
    const auto mod = forward(Y, w, c);
    for (std::size_t t = 0; t <= s; ++t) {
      EXPECT_EQ(mod.outputs[t], base.outputs[t]);
      EXPECT_EQ(mod.decisions[t].selected, base.decisions[t].selected);
    }
  }
}

TEST(Forward, KvOutputNormRemovesValueScale) {
  LayerConfig c = small_cfg();
  c.norm_eps = 0.0;
  c.tau = 0.3;
  LayerWeights w = init_weights(c, 13);
  const auto X = random_inputs(8, 16, 14);
  const auto a = forward(X, w, c);
  for (double& g : w.kv_norm_v) g *= 37.0;
  const auto b = forward(X, w, c);
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t j = 0; j < 16; ++j)
      EXPECT_NEAR(a.outputs[t][j], b.outputs[t][j], 1e-12 * (1 + std::abs(a.outputs[t][j])));
}

TEST(Forward, UsageNestedInThreshold) {
  LayerConfig c = small_cfg();
  const LayerWeights w = init_weights(c, 15);
  const auto X = random_inputs(40, 16, 16);
  double prev_rho = 2.0;
  std::vector<bool> prev_sel(40, true);
  for (double tau = 0.0; tau <= 2.0; tau += 0.05) {
    c.tau = tau;
    const auto out = forward(X, w, c);
    EXPECT_LE(out.rho_kv, prev_rho);
    for (std::size_t t = 0; t < 40; ++t) {
      if (out.decisions[t].selected) {
        EXPECT_TRUE(prev_sel[t]);
      }
      prev_sel[t] = out.decisions[t].selected;
    }
    prev_rho = out.rho_kv;
  }
}

TEST(Forward, ChunkedMatchesSequential) {
  LayerConfig c = small_cfg();
  c.tau = 0.8;
  const LayerWeights w = init_weights(c, 17, {0.0, 1.0, 1.0});
  const auto X = random_inputs(23, 16, 18);
  const auto seq = forward(X, w, c);
  c.chunked = true;
  for (std::size_t C : {1u, 3u, 4u, 64u}) {
    c.chunk = C;
    const auto chk = forward(X, w, c);
    for (std::size_t t = 0; t < 23; ++t)
      for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(chk.outputs[t][j], seq.outputs[t][j], 1e-10);
  }
}

TEST(Forward, NumericErrorCarriesPosition) {
  const LayerConfig c = small_cfg();
  auto X = random_inputs(6, 16, 19);
  X[3][2] = std::nan("");
  try {
    forward(X, init_weights(c, 1), c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
}

TEST(Forward, DocumentsAreIndependent) {
  LayerConfig c = small_cfg();
  c.tau = 0.5;
  const LayerWeights w = init_weights(c, 20);
  const auto X = random_inputs(14, 16, 21);
  SequenceMeta meta;
  for (std::size_t t = 0; t < 14; ++t) meta.doc_ids.push_back(t < 6 ? 7 : 9);
  const auto joint = forward(X, w, c, meta);
  const auto alone = forward(std::vector<Vec>(X.begin() + 6, X.end()), w, c);
  for (std::size_t t = 6; t < 14; ++t) {
    EXPECT_EQ(joint.decisions[t].selected, alone.decisions[t - 6].selected);
    // RoPE is applied at absolute positions; only relative offsets survive attention.
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(joint.outputs[t][j], alone.outputs[t - 6][j], 1e-10);
  }
  meta.doc_ids[12] = 7;
  EXPECT_THROW(forward(X, w, c, meta), ConfigError);
}

TEST(Forward, PaddingNeverSelected) {
  LayerConfig c = small_cfg();
  c.tau = 0.0;
  SequenceMeta meta;
  meta.padding = {false, false, true, false, true};
  const auto out = forward(random_inputs(5, 16, 22), init_weights(c, 23), c, meta);
  EXPECT_FALSE(out.decisions[2].selected);
  EXPECT_FALSE(out.decisions[4].selected);
  EXPECT_EQ(out.cache.size(), 3u);
}

TEST(Forward, LearnedRouterAttachScalesStoredValues) {
  LayerConfig c = small_cfg();
  c.router.kind = RouterKind::InputLinear;
  c.tau = 0.0;
  const auto out = forward(random_inputs(5, 16, 24), init_weights(c, 25), c);
  ASSERT_EQ(out.cache.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    const double p = out.decisions[t].attach;
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    for (std::size_t h = 0; h < c.h_kv(); ++h)
      for (std::size_t j = 0; j < c.kv_v_head; ++j)
        EXPECT_EQ(out.cache.entries()[t].values[h][j], p * out.trace.kv_v[t][h][j]);
  }
}

TEST(Forward, LearnedRouterScoreIsBroadcast) {
  LayerConfig c = small_cfg();
  c.router.kind = RouterKind::InputMlp;
  c.router.mlp_hidden = 6;
  const auto out = forward(random_inputs(3, 16, 26), init_weights(c, 27), c);
  for (const auto& d : out.decisions) EXPECT_EQ(d.head_scores, Vec(c.h_rnn(), d.head_scores[0]));
}

TEST(Ffn, MatchesLoopOracle) {
  const FfnWeights f = init_ffn(4, 6, 1);
  const Vec x{0.5, -1.0, 2.0, 0.1};
  const Vec y = ffn_swiglu(x, f);
  for (std::size_t o = 0; o < 4; ++o) {
    double s = 0;
    for (std::size_t m = 0; m < 6; ++m) {
      double g = 0, u = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        g += x[i] * f.w_gate(i, m);
        u += x[i] * f.w_up(i, m);
      }
      s += g / (1 + std::exp(-g)) * u * f.w_down(m, o);
    }
    EXPECT_NEAR(y[o], s, 1e-13);
  }
  EXPECT_EQ(f.parameter_count(), 4u + 3 * 24u);
}

TEST(Ffn, ZeroDownProjection) {
  FfnWeights f = init_ffn(4, 6, 2);
  f.w_down = Matrix(6, 4, 0.0);
  EXPECT_EQ(ffn_swiglu(Vec{1, 2, 3, 4}, f), Vec(4, 0.0));
}

TEST(Stack, SingleLayerComposition) {
  LayerConfig c = small_cfg();
  c.tau = 0.7;
  const StackLayer L{c, init_weights(c, 30), init_ffn(16, 20, 31)};
  const auto X = random_inputs(6, 16, 32);
  const auto so = stack_forward({L}, X);
  const auto lo = forward(X, L.ham, c);
  for (std::size_t t = 0; t < 6; ++t) {
    Vec h = X[t];
    for (std::size_t j = 0; j < 16; ++j) h[j] += lo.outputs[t][j];
    const Vec f = ffn_swiglu(rms_norm(h, L.ffn.prenorm, c.norm_eps), L.ffn);
    for (std::size_t j = 0; j < 16; ++j) h[j] += f[j];
    EXPECT_EQ(so.hidden[t], h);
  }
  EXPECT_EQ(so.rho_global, lo.rho_kv);
}

TEST(Stack, GlobalUsageIsLayerMean) {
  LayerConfig c = small_cfg();
  std::vector<StackLayer> layers;
  for (int l = 0; l < 3; ++l) layers.push_back({c, init_weights(c, 40 + l), init_ffn(16, 20, 50 + l, 0.3)});
  const std::vector<double> taus{0.0, 0.7, 2.5};
  const auto so = stack_forward(layers, random_inputs(10, 16, 33), {}, &taus);
  EXPECT_EQ(so.layers[0].rho_kv, 1.0);
  EXPECT_EQ(so.layers[2].rho_kv, 0.0);
  EXPECT_NEAR(so.rho_global, (1.0 + so.layers[1].rho_kv) / 3, 1e-15);
  const std::vector<double> bad{0.1};
  EXPECT_THROW(stack_forward(layers, random_inputs(2, 16, 1), {}, &bad), ConfigError);
}

TEST(Stack, EdaBlendsPreviousLayerScores) {
  LayerConfig c = small_cfg();
  c.tau = 0.6;
  std::vector<StackLayer> layers;
  for (int l = 0; l < 2; ++l) layers.push_back({c, init_weights(c, 60 + l), init_ffn(16, 20, 70 + l, 0.3)});
  const auto X = random_inputs(8, 16, 34);
  const auto plain = stack_forward(layers, X);
  for (auto& L : layers) L.cfg.router.eda_enabled = true;
  const auto eda = stack_forward(layers, X);
  // The first layer has no predecessor and is unaffected.
  EXPECT_EQ(eda.layers[0].outputs, plain.layers[0].outputs);
  for (std::size_t t = 0; t < 8; ++t) {
    const double raw = eda.layers[1].decisions[t].raw_score;
    EXPECT_EQ(raw, plain.layers[1].decisions[t].raw_score);
    EXPECT_NEAR(eda.layers[1].decisions[t].score, 0.5 * raw + 0.5 * eda.layers[0].decisions[t].score, 1e-15);
  }
}

TEST(Forward, LearnableThresholdReadsWeight) {
  LayerConfig c = small_cfg();
  c.learnable_threshold = true;
  LayerWeights w = init_weights(c, 80);
  const auto X = random_inputs(12, 16, 81);
  w.threshold_logit[0] = -800.0;
  EXPECT_EQ(forward(X, w, c).rho_kv, 1.0);
  w.threshold_logit[0] = 800.0;
  EXPECT_EQ(forward(X, w, c).rho_kv, 0.0);
  c.tau = 0.0;
  EXPECT_EQ(forward(X, w, c).rho_kv, 1.0);
}
