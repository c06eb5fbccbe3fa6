// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// JSON run configuration: one object per module with flat keys. Unknown keys
// are rejected so that typos surface as configuration errors.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ham/controller.hpp"
#include "ham/cost_model.hpp"
#include "ham/ham_layer.hpp"
#include "ham/niah.hpp"
#include "json.hpp"

namespace ham {

using json = nlohmann::json;

struct ModelConfig {
  LayerConfig layer;
  std::size_t layers = 2;
  InitOptions init{-4.0, -6.0, 1.0};
  double ffn_scale = 0.5;

  ModelConfig() {
    layer.d_hidden = 32;
    layer.d_qk = 32;
    layer.d_v = 48;
    layer.rnn_qk_head = 16;
    layer.rnn_v_head = 24;
    layer.kv_qk_head = 8;
    layer.kv_v_head = 12;
    layer.d_int = 64;
    layer.chunk = 16;
    layer.tau = 0.5;
  }
};

struct CostSection {
  std::vector<cost::Family> families{cost::Family::Ham, cost::Family::Gdn, cost::Family::Transformer,
                                     cost::Family::GdnGsa};
  cost::TrainingSetup training;
  cost::Route route = cost::Route::ClosedForm;
  bool itemize = false;
};

struct SweepSection {
  std::size_t points = 20;
  std::size_t sequences = 4;
  std::size_t T = 128;
  std::optional<double> target_rho;
  ControllerSim controller;
};

struct TraceSection {
  double alpha_reset = 0.05;
};

struct NiahSection {
  NiahSpec spec;
  std::size_t seeds = 20;
};

struct RunConfig {
  std::string path;  // empty when built from defaults
  std::uint64_t seed = 0;
  ModelConfig model;
  CostSection cost;
  SweepSection sweep;
  TraceSection trace;
  NiahSection niah;
};

namespace detail {

inline void check_keys(const json& obj, const char* section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(std::string("config: '") + section + "' must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(std::string("config: unknown key '") + section + "." + k + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline RouterKind parse_router(const std::string& s) {
  if (s == "prediction_error") return RouterKind::PredictionError;
  if (s == "input_linear") return RouterKind::InputLinear;
  if (s == "input_mlp") return RouterKind::InputMlp;
  throw ConfigError("config: unknown router '" + s + "'");
}

inline const char* router_name(RouterKind k) {
  switch (k) {
    case RouterKind::PredictionError: return "prediction_error";
    case RouterKind::InputLinear: return "input_linear";
    case RouterKind::InputMlp: return "input_mlp";
  }
  return "?";
}

}  // namespace detail

inline void parse_model(const json& j, ModelConfig& m) {
  detail::check_keys(j, "model",
                     {"d_hidden", "d_qk", "d_v", "rnn_qk_head", "rnn_v_head", "kv_qk_head", "kv_v_head",
                      "d_conv", "d_int", "layers", "chunk", "chunked", "router", "aggregation", "eda",
                      "eda_gamma", "attach", "mlp_hidden", "tau", "p_tau", "learnable_threshold",
                      "rope_base", "norm_eps", "error_eps", "A_log", "dt_bias", "init_scale", "ffn_scale"});
  LayerConfig& c = m.layer;
  detail::read(j, "d_hidden", c.d_hidden);
  detail::read(j, "d_qk", c.d_qk);
  detail::read(j, "d_v", c.d_v);
  detail::read(j, "rnn_qk_head", c.rnn_qk_head);
  detail::read(j, "rnn_v_head", c.rnn_v_head);
  detail::read(j, "kv_qk_head", c.kv_qk_head);
  detail::read(j, "kv_v_head", c.kv_v_head);
  detail::read(j, "d_conv", c.d_conv);
  detail::read(j, "d_int", c.d_int);
  detail::read(j, "layers", m.layers);
  detail::read(j, "chunk", c.chunk);
  detail::read(j, "chunked", c.chunked);
  if (j.contains("router")) c.router.kind = detail::parse_router(j.at("router").get<std::string>());
  if (j.contains("aggregation")) {
    const auto a = j.at("aggregation").get<std::string>();
    if (a != "min" && a != "max") throw ConfigError("config: aggregation must be 'min' or 'max'");
    c.router.aggregation = a == "min" ? Aggregation::Min : Aggregation::Max;
  }
  detail::read(j, "eda", c.router.eda_enabled);
  detail::read(j, "eda_gamma", c.router.eda_gamma);
  if (j.contains("attach") && !j.at("attach").is_null()) c.router.attach = j.at("attach").get<bool>();
  detail::read(j, "mlp_hidden", c.router.mlp_hidden);
  if (j.contains("tau")) c.tau = j.at("tau").is_null() ? std::nullopt : std::optional(j.at("tau").get<double>());
  detail::read(j, "p_tau", c.threshold.p_tau);
  c.threshold.scale_s = c.router.metric_scale();
  detail::read(j, "learnable_threshold", c.learnable_threshold);
  detail::read(j, "rope_base", c.rope_base);
  detail::read(j, "norm_eps", c.norm_eps);
  detail::read(j, "error_eps", c.error_eps);
  detail::read(j, "A_log", m.init.A_log);
  detail::read(j, "dt_bias", m.init.dt_bias);
  detail::read(j, "init_scale", m.init.proj_scale);
  detail::read(j, "ffn_scale", m.ffn_scale);
  if (m.layers == 0) throw ConfigError("config: model.layers must be >= 1");
  c.validate();
}

inline json model_to_json(const ModelConfig& m) {
  const LayerConfig& c = m.layer;
  json j = {{"d_hidden", c.d_hidden},     {"d_qk", c.d_qk},
            {"d_v", c.d_v},               {"rnn_qk_head", c.rnn_qk_head},
            {"rnn_v_head", c.rnn_v_head}, {"kv_qk_head", c.kv_qk_head},
            {"kv_v_head", c.kv_v_head},   {"d_conv", c.d_conv},
            {"d_int", c.d_int},           {"layers", m.layers},
            {"chunk", c.chunk},           {"chunked", c.chunked},
            {"router", detail::router_name(c.router.kind)},
            {"aggregation", c.router.aggregation == Aggregation::Min ? "min" : "max"},
            {"eda", c.router.eda_enabled}, {"eda_gamma", c.router.eda_gamma},
            {"mlp_hidden", c.router.mlp_hidden}, {"p_tau", c.threshold.p_tau},
            {"learnable_threshold", c.learnable_threshold}, {"rope_base", c.rope_base},
            {"norm_eps", c.norm_eps},     {"error_eps", c.error_eps},
            {"A_log", m.init.A_log},      {"dt_bias", m.init.dt_bias},
            {"init_scale", m.init.proj_scale}, {"ffn_scale", m.ffn_scale}};
  j["attach"] = c.router.attach ? json(*c.router.attach) : json(nullptr);
  j["tau"] = c.tau ? json(*c.tau) : json(nullptr);
  return j;
}

inline RunConfig parse_config(const json& j) {
  RunConfig rc;
  detail::check_keys(j, "root", {"seed", "model", "cost", "sweep", "trace", "niah"});
  detail::read(j, "seed", rc.seed);
  if (j.contains("model")) parse_model(j.at("model"), rc.model);
  if (j.contains("cost")) {
    const json& c = j.at("cost");
    detail::check_keys(c, "cost", {"families", "T", "kv_fraction", "ranks", "steps", "route", "itemize"});
    if (c.contains("families")) {
      rc.cost.families.clear();
      for (const auto& f : c.at("families")) rc.cost.families.push_back(cost::parse_family(f.get<std::string>()));
    }
    detail::read(c, "T", rc.cost.training.T);
    detail::read(c, "kv_fraction", rc.cost.training.kv_fraction);
    detail::read(c, "ranks", rc.cost.training.ranks);
    detail::read(c, "steps", rc.cost.training.steps);
    detail::read(c, "itemize", rc.cost.itemize);
    if (c.contains("route")) {
      const auto r = c.at("route").get<std::string>();
      if (r != "closed" && r != "itemized") throw ConfigError("config: cost.route must be 'closed' or 'itemized'");
      rc.cost.route = r == "closed" ? cost::Route::ClosedForm : cost::Route::Itemized;
    }
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    detail::check_keys(s, "sweep", {"points", "sequences", "T", "target_rho", "controller_steps", "batch_tokens",
                                    "beta_a", "beta_b", "freeze_N"});
    detail::read(s, "points", rc.sweep.points);
    detail::read(s, "sequences", rc.sweep.sequences);
    detail::read(s, "T", rc.sweep.T);
    if (s.contains("target_rho")) rc.sweep.target_rho = s.at("target_rho").get<double>();
    detail::read(s, "controller_steps", rc.sweep.controller.steps);
    detail::read(s, "batch_tokens", rc.sweep.controller.batch_tokens);
    detail::read(s, "beta_a", rc.sweep.controller.beta_a);
    detail::read(s, "beta_b", rc.sweep.controller.beta_b);
    detail::read(s, "freeze_N", rc.sweep.controller.freeze_N);
  }
  if (j.contains("trace")) {
    detail::check_keys(j.at("trace"), "trace", {"alpha_reset"});
    detail::read(j.at("trace"), "alpha_reset", rc.trace.alpha_reset);
  }
  if (j.contains("niah")) {
    const json& n = j.at("niah");
    detail::check_keys(n, "niah", {"T", "needle_pos", "needle_len", "pattern_vocab_size", "needle_vocab_size",
                                   "embed_dim", "seeds"});
    detail::read(n, "T", rc.niah.spec.T);
    detail::read(n, "needle_pos", rc.niah.spec.needle_pos);
    detail::read(n, "needle_len", rc.niah.spec.needle_len);
    detail::read(n, "pattern_vocab_size", rc.niah.spec.pattern_vocab_size);
    detail::read(n, "needle_vocab_size", rc.niah.spec.needle_vocab_size);
    detail::read(n, "embed_dim", rc.niah.spec.embed_dim);
    detail::read(n, "seeds", rc.niah.seeds);
    rc.niah.spec.validate();
  }
  if (rc.sweep.points < 2) throw ConfigError("config: sweep.points must be >= 2");
  if (rc.sweep.sequences == 0 || rc.sweep.T == 0) throw ConfigError("config: sweep corpus is empty");
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig rc = parse_config(j);
  rc.path = path;
  return rc;
}

}  // namespace ham
