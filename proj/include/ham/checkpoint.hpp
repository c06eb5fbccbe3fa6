// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Weight checkpoints, little-endian:
//   "HAMCKPT1"  u64 meta_len  meta (JSON: {"format": 1, "model": {...}})  u64 n_tensors
//   per tensor: u32 name_len, name, u32 ndim, ndim x u64 dims, f64 data (row-major)
// Tensor names are "l<layer>.ham.<name>" and "l<layer>.ffn.<name>".

#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ham/config_io.hpp"
#include "ham/corpus.hpp"

namespace ham {

inline std::vector<StackLayer> build_stack(const ModelConfig& m, std::uint64_t seed) {
  std::vector<StackLayer> layers;
  for (std::size_t l = 0; l < m.layers; ++l) {
    const std::uint64_t s = seed * 1000003ULL + 2 * l;
    layers.push_back({m.layer, init_weights(m.layer, s, m.init),
                      init_ffn(m.layer.d_hidden, m.layer.d_int, s + 1, m.ffn_scale)});
  }
  return layers;
}

namespace detail {

struct TensorRef {
  std::vector<std::uint64_t> dims;
  double* data;
  std::size_t size;
};

// Every tensor of the stack, keyed by checkpoint name, in write order.
inline std::vector<std::pair<std::string, TensorRef>> stack_tensors(std::vector<StackLayer>& layers) {
  std::vector<std::pair<std::string, TensorRef>> out;
  auto add = [&](const std::string& name, auto& t) {
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Matrix>)
      out.push_back({name, {{t.rows(), t.cols()}, t.flat().data(), t.size()}});
    else
      out.push_back({name, {{t.size()}, t.data(), t.size()}});
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    layers[l].ham.for_each([&](const std::string& n, auto& t) { add(p + "ham." + n, t); });
    add(p + "ffn.prenorm", layers[l].ffn.prenorm);
    add(p + "ffn.w_gate", layers[l].ffn.w_gate);
    add(p + "ffn.w_up", layers[l].ffn.w_up);
    add(p + "ffn.w_down", layers[l].ffn.w_down);
  }
  return out;
}

}  // namespace detail

inline void write_checkpoint(const ModelConfig& m, std::vector<StackLayer> layers, std::ostream& os) {
  const std::string meta = json{{"format", 1}, {"model", model_to_json(m)}}.dump();
  os.write("HAMCKPT1", 8);
  io::put<std::uint64_t>(os, meta.size());
  os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  const auto tensors = detail::stack_tensors(layers);
  io::put<std::uint64_t>(os, tensors.size());
  for (const auto& [name, t] : tensors) {
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) io::put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double)));
  }
}

struct Checkpoint {
  ModelConfig model;
  std::vector<StackLayer> layers;
};

// Reads the model config from the metadata, builds a stack of that shape and
// fills every tensor; names and shapes must match exactly.
inline Checkpoint read_checkpoint(std::istream& is) {
  io::expect_magic(is, "HAMCKPT1");
  const auto meta_len = io::get<std::uint64_t>(is, "meta length");
  if (meta_len > (1u << 24)) throw ConfigError("checkpoint: metadata too large");
  std::string meta(meta_len, '\0');
  if (!is.read(meta.data(), static_cast<std::streamsize>(meta_len))) throw ConfigError("truncated file: meta");
  Checkpoint ck;
  try {
    const json j = json::parse(meta);
    if (j.at("format").get<int>() != 1) throw ConfigError("checkpoint: unsupported format");
    parse_model(j.at("model"), ck.model);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  ck.layers = build_stack(ck.model, 0);
  auto tensors = detail::stack_tensors(ck.layers);
  const auto n = io::get<std::uint64_t>(is, "tensor count");
  if (n != tensors.size()) throw ConfigError("checkpoint: tensor count does not match model");
  for (auto& [want, t] : tensors) {
    const auto len = io::get<std::uint32_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ConfigError("truncated file: name");
    if (name != want) throw ConfigError("checkpoint: expected tensor " + want + ", found " + name);
    const auto nd = io::get<std::uint32_t>(is, "ndim");
    std::vector<std::uint64_t> dims(nd);
    for (auto& d : dims) d = io::get<std::uint64_t>(is, "dim");
    if (dims != t.dims) throw ConfigError("checkpoint: shape mismatch for " + name);
    if (!is.read(reinterpret_cast<char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double))))
      throw ConfigError("truncated file: " + name);
  }
  return ck;
}

inline void save_checkpoint(const ModelConfig& m, const std::vector<StackLayer>& layers, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  write_checkpoint(m, layers, os);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path);
  return read_checkpoint(is);
}

}  // namespace ham
