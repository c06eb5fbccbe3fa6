// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Synthetic needle-in-a-haystack sequences: a fixed cyclic pattern of random
// token embeddings with one window of tokens from a disjoint vocabulary.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "ham/ham_layer.hpp"

namespace ham {

struct NiahSpec {
  std::size_t T = 256;
  std::size_t needle_pos = 160;  // first needle token, 0-based
  std::size_t needle_len = 4;
  std::size_t pattern_vocab_size = 8;
  std::size_t needle_vocab_size = 16;
  std::size_t embed_dim = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (T == 0 || embed_dim == 0 || pattern_vocab_size == 0) throw ConfigError("niah: empty sequence or vocabulary");
    if (needle_len > 0 && (needle_pos + needle_len > T || needle_vocab_size == 0))
      throw ConfigError("niah: needle window outside the sequence");
  }
};

struct NiahSequence {
  std::vector<Vec> embeddings;
  std::vector<bool> needle;
  std::vector<std::size_t> token_ids;  // pattern ids < pattern_vocab_size, needle ids after
};

inline NiahSequence gen_niah(const NiahSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> N(0.0, 1.0);
  // One table for both vocabularies; ids are disjoint by construction.
  std::vector<Vec> table(spec.pattern_vocab_size + spec.needle_vocab_size, Vec(spec.embed_dim));
  for (auto& e : table)
    for (double& x : e) x = N(rng);
  std::uniform_int_distribution<std::size_t> pick(0, std::max<std::size_t>(spec.needle_vocab_size, 1) - 1);

  NiahSequence s;
  s.embeddings.reserve(spec.T);
  for (std::size_t t = 0; t < spec.T; ++t) {
    const bool in = t >= spec.needle_pos && t < spec.needle_pos + spec.needle_len;
    const std::size_t id = in ? spec.pattern_vocab_size + pick(rng) : t % spec.pattern_vocab_size;
    s.token_ids.push_back(id);
    s.embeddings.push_back(table[id]);
    s.needle.push_back(in);
  }
  return s;
}

// A small layer whose memory keeps what it writes: alpha near one, strong
// writes, and keys of at least pattern length.
inline LayerConfig niah_layer_config(std::size_t embed_dim) {
  LayerConfig c;
  c.d_hidden = embed_dim;
  c.d_qk = 32;
  c.d_v = 32;
  c.rnn_qk_head = 16;
  c.rnn_v_head = 16;
  c.kv_qk_head = 8;
  c.kv_v_head = 8;
  c.d_int = 2 * embed_dim;
  c.tau = 2.5;  // scores only; nothing needs to be cached
  c.validate();
  return c;
}

inline InitOptions niah_init() { return {-4.0, -6.0, 1.0}; }

struct NiahResult {
  std::vector<double> scores;  // aggregated routing score per token
  double needle_mean = 0.0;
  double pattern_p95 = 0.0;
  bool spike = false;
};

// Nearest-rank percentile, q in [0, 1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw ConfigError("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// Scores a NIAH sequence with a fresh layer; pattern tokens in the first
// cycle are excluded from the reference distribution.
inline NiahResult niah_scores(const NiahSpec& spec, const LayerConfig& cfg, const LayerWeights& w) {
  const NiahSequence s = gen_niah(spec);
  const LayerOutput out = forward(s.embeddings, w, cfg);
  NiahResult r;
  std::vector<double> pattern;
  double needle_sum = 0.0;
  for (std::size_t t = 0; t < spec.T; ++t) {
    r.scores.push_back(out.decisions[t].score);
    if (s.needle[t]) {
      needle_sum += r.scores.back();
    } else if (t >= spec.pattern_vocab_size) {
      pattern.push_back(r.scores.back());
    }
  }
  if (spec.needle_len == 0) return r;
  r.needle_mean = needle_sum / static_cast<double>(spec.needle_len);
  r.pattern_p95 = percentile(pattern, 0.95);
  r.spike = r.needle_mean > r.pattern_p95;
  return r;
}

inline NiahResult run_niah_seed(NiahSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  const LayerConfig cfg = niah_layer_config(spec.embed_dim);
  return niah_scores(spec, cfg, init_weights(cfg, seed ^ 0x9e3779b97f4a7c15ULL, niah_init()));
}

}  // namespace ham
