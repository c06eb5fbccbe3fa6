// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Embedding corpus file, little-endian:
//   "HAMCORP1"  u64 d  u64 n_seq
//   per sequence: u64 T, T x i64 doc id, T x d f64 (row-major)
// A negative doc id marks a padding token.

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ham/ham_layer.hpp"

namespace ham {

struct CorpusSequence {
  std::vector<long> doc_ids;
  std::vector<Vec> embeddings;

  SequenceMeta meta() const {
    SequenceMeta m;
    m.doc_ids = doc_ids;
    m.padding.resize(doc_ids.size());
    for (std::size_t t = 0; t < doc_ids.size(); ++t) m.padding[t] = doc_ids[t] < 0;
    return m;
  }
};

struct Corpus {
  std::size_t d = 0;
  std::vector<CorpusSequence> sequences;
};

namespace io {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError(std::string("truncated file: ") + what);
  return v;
}

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
  std::array<char, 8> buf{};
  if (!is.read(buf.data(), 8) || std::memcmp(buf.data(), magic, 8) != 0)
    throw ConfigError(std::string("bad magic, expected ") + magic);
}

}  // namespace io

inline void write_corpus(const Corpus& c, std::ostream& os) {
  os.write("HAMCORP1", 8);
  io::put<std::uint64_t>(os, c.d);
  io::put<std::uint64_t>(os, c.sequences.size());
  for (const auto& s : c.sequences) {
    if (s.doc_ids.size() != s.embeddings.size()) throw DimensionError("write_corpus: doc ids vs rows");
    io::put<std::uint64_t>(os, s.embeddings.size());
    for (long id : s.doc_ids) io::put<std::int64_t>(os, id);
    for (const auto& row : s.embeddings) {
      detail::require_dims(row.size() == c.d, "write_corpus: row width != d");
      os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  }
}

inline Corpus read_corpus(std::istream& is) {
  io::expect_magic(is, "HAMCORP1");
  Corpus c;
  c.d = io::get<std::uint64_t>(is, "corpus width");
  const auto n = io::get<std::uint64_t>(is, "corpus count");
  for (std::uint64_t i = 0; i < n; ++i) {
    CorpusSequence s;
    const auto T = io::get<std::uint64_t>(is, "sequence length");
    for (std::uint64_t t = 0; t < T; ++t) s.doc_ids.push_back(io::get<std::int64_t>(is, "doc id"));
    s.embeddings.assign(T, Vec(c.d));
    for (auto& row : s.embeddings)
      if (!is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(c.d * sizeof(double))))
        throw ConfigError("truncated file: embeddings");
    c.sequences.push_back(std::move(s));
  }
  return c;
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  write_corpus(c, os);
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open corpus " + path);
  return read_corpus(is);
}

}  // namespace ham
