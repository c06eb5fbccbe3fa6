// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Sparse KV scratchpad: an append-only list of routed (key, value) pairs and
// softmax attention restricted to causal, same-document, non-padding entries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ham/core_math.hpp"

namespace ham {

struct KvEntry {
  std::size_t orig_pos = 0;
  long doc_id = 0;
  bool padding = false;
  std::vector<Vec> keys;    // [head], rotated at orig_pos
  std::vector<Vec> values;  // [head]
};

class KvCache {
 public:
  KvCache() = default;
  KvCache(std::size_t heads, std::size_t k_dim, std::size_t v_dim)
      : heads_(heads), k_dim_(k_dim), v_dim_(v_dim) {}

  std::size_t heads() const { return heads_; }
  std::size_t k_dim() const { return k_dim_; }
  std::size_t v_dim() const { return v_dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<KvEntry>& entries() const { return entries_; }

  void push(KvEntry e) {
    if (!entries_.empty() && e.orig_pos <= entries_.back().orig_pos)
      throw ConfigError("KvCache: positions must be strictly increasing");
    detail::require_dims(e.keys.size() == heads_ && e.values.size() == heads_,
                         "KvCache: head count mismatch");
    for (std::size_t h = 0; h < heads_; ++h)
      detail::require_dims(e.keys[h].size() == k_dim_ && e.values[h].size() == v_dim_,
                           "KvCache: per-head dimension mismatch");
    entries_.push_back(std::move(e));
  }

 private:
  std::size_t heads_ = 0;
  std::size_t k_dim_ = 0;
  std::size_t v_dim_ = 0;
  std::vector<KvEntry> entries_;
};

inline void append_if_selected(KvCache& cache, std::size_t t, long doc, std::vector<Vec> keys,
                               std::vector<Vec> values, bool selected, bool padding = false) {
  if (!cache.empty() && t <= cache.entries().back().orig_pos)
    throw ConfigError("append_if_selected: non-monotone position");
  if (!selected) return;
  cache.push({t, doc, padding, std::move(keys), std::move(values)});
}

struct MaskSpec {
  std::size_t position = 0;
  long doc_id = 0;
};

inline bool admissible(const KvEntry& e, const MaskSpec& m) {
  return e.orig_pos <= m.position && e.doc_id == m.doc_id && !e.padding;
}

// Per head: softmax(q . k_i / sqrt(d_k)) weighted sum of v_i over admissible
// entries; a zero vector when none are admissible.
inline std::vector<Vec> sparse_attend(const std::vector<Vec>& q, const KvCache& cache,
                                      const MaskSpec& mask) {
  detail::require_dims(q.size() == cache.heads(), "sparse_attend: head count mismatch");
  const auto& es = cache.entries();
  // Entries are position-sorted, so the causal set is a prefix.
  const auto end = std::upper_bound(es.begin(), es.end(), mask.position,
                                    [](std::size_t p, const KvEntry& e) { return p < e.orig_pos; });
  std::vector<const KvEntry*> live;
  for (auto it = es.begin(); it != end; ++it)
    if (admissible(*it, mask)) live.push_back(&*it);

  const double scale = 1.0 / std::sqrt(static_cast<double>(cache.k_dim()));
  std::vector<Vec> out(cache.heads(), Vec(cache.v_dim(), 0.0));
  if (live.empty()) return out;
  Vec logits(live.size());
  for (std::size_t h = 0; h < cache.heads(); ++h) {
    detail::require_dims(q[h].size() == cache.k_dim(), "sparse_attend: query length");
    double mx = -INFINITY;
    for (std::size_t i = 0; i < live.size(); ++i) {
      logits[i] = dot(q[h], live[i]->keys[h]) * scale;
      mx = std::max(mx, logits[i]);
    }
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t i = 0; i < live.size(); ++i) {
      const double w = logits[i] / z;
      const Vec& v = live[i]->values[h];
      for (std::size_t j = 0; j < v.size(); ++j) out[h][j] += w * v[j];
    }
  }
  return out;
}

inline double usage(const KvCache& cache, std::size_t T) {
  if (T == 0 || cache.size() > T) throw ConfigError("usage: T must be >= T_KV and positive");
  return static_cast<double>(cache.size()) / static_cast<double>(T);
}

// CSV columns: orig_pos,doc_id,padding,k<h>_<i>...,v<h>_<j>... with %.17g floats.
inline void dump_cache_csv(const KvCache& cache, std::ostream& os) {
  os << "orig_pos,doc_id,padding";
  for (std::size_t h = 0; h < cache.heads(); ++h)
    for (std::size_t i = 0; i < cache.k_dim(); ++i) os << ",k" << h << '_' << i;
  for (std::size_t h = 0; h < cache.heads(); ++h)
    for (std::size_t j = 0; j < cache.v_dim(); ++j) os << ",v" << h << '_' << j;
  os << '\n';
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << ',' << buf;
  };
  for (const auto& e : cache.entries()) {
    os << e.orig_pos << ',' << e.doc_id << ',' << (e.padding ? 1 : 0);
    for (const auto& k : e.keys)
      for (double x : k) put(x);
    for (const auto& v : e.values)
      for (double x : v) put(x);
    os << '\n';
  }
}

inline KvCache load_cache_csv(std::istream& is, std::size_t heads, std::size_t k_dim,
                              std::size_t v_dim) {
  KvCache cache(heads, k_dim, v_dim);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("load_cache_csv: missing header");
  const std::size_t want = 3 + heads * (k_dim + v_dim);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != want) throw DimensionError("load_cache_csv: wrong column count");
    KvEntry e;
    e.orig_pos = std::stoull(cells[0]);
    e.doc_id = std::stol(cells[1]);
    e.padding = cells[2] == "1";
    std::size_t c = 3;
    e.keys.assign(heads, Vec(k_dim));
    e.values.assign(heads, Vec(v_dim));
    for (auto& k : e.keys)
      for (double& x : k) x = std::stod(cells[c++]);
    for (auto& v : e.values)
      for (double& x : v) x = std::stod(cells[c++]);
    cache.push(std::move(e));
  }
  return cache;
}

}  // namespace ham
