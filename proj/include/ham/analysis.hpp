// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// Analysis commands behind the CLI. Each returns its results and writes CSV
// files plus manifest.json into an output directory.
//
// CSV schemas (fixed):
//   training_flops.csv  family,zflops,delta_vs_ham_pct
//   cost_totals.csv     family,d,layers,params,forward_flops,memory_bytes,training_flops
//   cost_itemized.csv   family,table,section,name,value
//   sweep.csv           mode,tau,layer,rho
//   controller.csv      target,step,gap,p_tau,tau,realized
//   controller_summary.csv  target,heldout_rho,final_tau,steps
//   trace.csv           seq,layer,t,doc_id,score,raw_score,selected,cum_tkv
//   alpha_resets.csv    seq,layer,t,head,alpha
//   niah_scores.csv     seed,t,needle,score
//   niah_summary.csv    seed,needle_mean,pattern_p95,spike

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ham/checkpoint.hpp"
#include "ham/config_io.hpp"
#include "ham/corpus.hpp"
#include "ham/niah.hpp"

namespace ham {

inline constexpr const char* kVersion = "ham 0.1.0";

struct RunManifest {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string command;
  std::vector<std::string> outputs;
  std::string version = kVersion;

  json to_json() const {
    return {{"config_path", config_path}, {"seed", seed},       {"command", command},
            {"outputs", outputs},         {"version", version}};
  }
};

class OutputDir {
 public:
  OutputDir(const std::string& dir, const RunConfig& rc, std::string command) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    man_.config_path = rc.path;
    man_.seed = rc.seed;
    man_.command = std::move(command);
  }

  std::string path(const std::string& name) {
    const std::string p = (dir_ / name).string();
    man_.outputs.push_back(p);
    return p;
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name));
    if (!os) throw ConfigError("cannot write " + name);
    os.precision(17);
    return os;
  }

  void finish() {
    std::ofstream os(dir_ / "manifest.json");
    os << man_.to_json().dump(2) << '\n';
  }

  const RunManifest& manifest() const { return man_; }

 private:
  std::filesystem::path dir_;
  RunManifest man_;
};

// ---------------------------------------------------------------- cost

struct CostOptions {
  std::optional<cost::Family> family;
  std::optional<double> T;
  std::optional<bool> itemize;
};

struct CostEntry {
  cost::Family family = cost::Family::Ham;
  cost::ArchConfig arch;
  double params = 0, forward_flops = 0, memory_bytes = 0, training_flops = 0;
  std::optional<double> delta_vs_ham;  // relative, not percent
};

// The 800M-class configurations of each family.
inline cost::ArchConfig reference_arch(cost::Family f) {
  return f == cost::Family::Transformer ? cost::ArchConfig::from_hidden(f, 1920, 23)
                                        : cost::ArchConfig::from_hidden(f, 1792, 24);
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::vector<CostEntry> cmd_cost(const RunConfig& rc, const CostOptions& opt, OutputDir& out) {
  std::vector<cost::Family> fams = opt.family ? std::vector{*opt.family} : rc.cost.families;
  cost::TrainingSetup setup = rc.cost.training;
  if (opt.T) setup.T = *opt.T;
  const bool itemize = opt.itemize.value_or(rc.cost.itemize);
  const double T = setup.T;

  std::vector<CostEntry> rows;
  std::optional<double> ham;
  for (cost::Family f : fams) {
    CostEntry e;
    e.family = f;
    e.arch = reference_arch(f);
    const double tkv = f == cost::Family::Ham ? setup.kv_fraction * T : 0.0;
    e.params = cost::params(e.arch);
    e.forward_flops = cost::forward_flops(e.arch, T, tkv, rc.cost.route);
    e.memory_bytes = cost::forward_memory(e.arch, T, tkv, rc.cost.route);
    e.training_flops = cost::training_flops(e.arch, setup, rc.cost.route);
    if (f == cost::Family::Ham) ham = e.training_flops;
    rows.push_back(e);
  }
  if (ham)
    for (auto& e : rows) e.delta_vs_ham = e.training_flops / *ham - 1.0;

  auto tf = out.open("training_flops.csv");
  tf << "family,zflops,delta_vs_ham_pct\n";
  auto tot = out.open("cost_totals.csv");
  tot << "family,d,layers,params,forward_flops,memory_bytes,training_flops\n";
  json j = json::array();
  for (const auto& e : rows) {
    const char* name = cost::family_name(e.family);
    tf << name << ',' << format_fixed(e.training_flops / cost::kZetta, 4) << ','
       << (e.delta_vs_ham ? format_fixed(100 * *e.delta_vs_ham, 1) : "") << '\n';
    tot << name << ',' << e.arch.d << ',' << e.arch.layers << ',' << e.params << ',' << e.forward_flops << ','
        << e.memory_bytes << ',' << e.training_flops << '\n';
    j.push_back({{"family", name},
                 {"d", e.arch.d},
                 {"layers", e.arch.layers},
                 {"params", e.params},
                 {"forward_flops", e.forward_flops},
                 {"memory_bytes", e.memory_bytes},
                 {"training_flops", e.training_flops},
                 {"training_zflops", e.training_flops / cost::kZetta},
                 {"delta_vs_ham", e.delta_vs_ham ? json(*e.delta_vs_ham) : json(nullptr)}});
  }
  json doc = {{"T", T},
              {"ranks", setup.ranks},
              {"steps", setup.steps},
              {"kv_fraction", setup.kv_fraction},
              {"route", rc.cost.route == cost::Route::ClosedForm ? "closed" : "itemized"},
              {"families", j}};
  if (itemize) {
    auto it = out.open("cost_itemized.csv");
    it << "family,table,section,name,value\n";
    json items = json::array();
    for (const auto& e : rows) {
      const double tkv = e.family == cost::Family::Ham ? setup.kv_fraction * T : 0.0;
      std::vector<cost::CostRow> all = cost::param_rows(e.arch);
      all = cost::append(std::move(all), cost::flop_rows(e.arch, T, tkv));
      all = cost::append(std::move(all), cost::memory_rows(e.arch, T, tkv));
      for (const auto& r : all) {
        it << cost::family_name(e.family) << ',' << r.table << ",\"" << r.section << "\",\"" << r.name << "\","
           << r.value << '\n';
        items.push_back({{"family", cost::family_name(e.family)},
                         {"table", r.table},
                         {"section", r.section},
                         {"name", r.name},
                         {"value", r.value}});
      }
    }
    doc["itemized"] = items;
  }
  std::ofstream(out.path("cost.json")) << doc.dump(2) << '\n';
  return rows;
}

// ---------------------------------------------------------------- corpora

// Periodic sequences with a needle, two documents per sequence.
inline Corpus synthetic_corpus(std::size_t d, std::size_t sequences, std::size_t T, std::uint64_t seed) {
  Corpus c;
  c.d = d;
  for (std::size_t i = 0; i < sequences; ++i) {
    NiahSpec spec;
    spec.T = T;
    spec.embed_dim = d;
    spec.needle_len = T >= 8 ? 2 : 0;
    spec.needle_pos = T / 3;
    spec.seed = seed * 7919 + i;
    CorpusSequence s;
    s.embeddings = gen_niah(spec).embeddings;
    for (std::size_t t = 0; t < T; ++t) s.doc_ids.push_back(static_cast<long>(2 * i + (t >= T / 2 ? 1 : 0)));
    c.sequences.push_back(std::move(s));
  }
  return c;
}

struct LoadedModel {
  ModelConfig model;
  std::vector<StackLayer> layers;
};

inline LoadedModel load_model(const RunConfig& rc, const std::optional<std::string>& checkpoint) {
  if (checkpoint) {
    Checkpoint ck = load_checkpoint(*checkpoint);
    return {ck.model, std::move(ck.layers)};
  }
  return {rc.model, build_stack(rc.model, rc.seed)};
}

inline void check_corpus(const Corpus& c, const ModelConfig& m) {
  if (c.d != m.layer.d_hidden) throw ConfigError("corpus width does not match model d_hidden");
  if (c.sequences.empty()) throw ConfigError("corpus has no sequences");
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::optional<std::string> corpus;
  std::optional<std::string> checkpoint;
  std::optional<double> target_rho;
};

struct SweepPoint {
  double tau;
  std::vector<double> layer_rho;   // each layer swept alone, the others at their configured tau
  std::vector<double> global_rho;  // all layers share tau
  double global_mean;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<ControllerSimResult> controller;
};

inline double metric_max(const LayerConfig& c) { return c.router.metric_scale(); }

// Pooled fraction of selected tokens per layer.
inline std::vector<double> corpus_usage(const std::vector<StackLayer>& layers, const Corpus& c,
                                        const std::vector<double>& taus) {
  std::vector<double> sel(layers.size(), 0.0);
  double tokens = 0;
  for (const auto& s : c.sequences) {
    const StackOutput so = stack_forward(layers, s.embeddings, s.meta(), &taus);
    for (std::size_t l = 0; l < layers.size(); ++l) sel[l] += static_cast<double>(so.layers[l].cache.size());
    tokens += static_cast<double>(s.embeddings.size());
  }
  for (double& x : sel) x /= tokens;
  return sel;
}

inline SweepResult cmd_sweep(const RunConfig& rc, const SweepOptions& opt, OutputDir& out) {
  const LoadedModel lm = load_model(rc, opt.checkpoint);
  const Corpus corpus = opt.corpus ? load_corpus(*opt.corpus)
                                   : synthetic_corpus(lm.model.layer.d_hidden, rc.sweep.sequences, rc.sweep.T, rc.seed);
  check_corpus(corpus, lm.model);
  const std::size_t L = lm.layers.size();
  const double top = metric_max(lm.model.layer);
  std::vector<double> grid;
  for (std::size_t i = 0; i < rc.sweep.points; ++i)
    grid.push_back(top * static_cast<double>(i) / static_cast<double>(rc.sweep.points - 1));
  grid.push_back(top * 1.05);  // strictly above the metric range

  std::vector<double> base(L);
  for (std::size_t l = 0; l < L; ++l) base[l] = lm.layers[l].cfg.tau_value();

  SweepResult res;
  auto csv = out.open("sweep.csv");
  csv << "mode,tau,layer,rho\n";
  for (double tau : grid) {
    SweepPoint p{tau, std::vector<double>(L), {}, 0.0};
    for (std::size_t l = 0; l < L; ++l) {
      // Layers after l cannot influence layer l.
      std::vector<StackLayer> prefix(lm.layers.begin(), lm.layers.begin() + static_cast<long>(l) + 1);
      std::vector<double> taus(base.begin(), base.begin() + static_cast<long>(l) + 1);
      taus[l] = tau;
      p.layer_rho[l] = corpus_usage(prefix, corpus, taus)[l];
      csv << "layer," << tau << ',' << l << ',' << p.layer_rho[l] << '\n';
    }
    p.global_rho = corpus_usage(lm.layers, corpus, std::vector<double>(L, tau));
    for (std::size_t l = 0; l < L; ++l) {
      p.global_mean += p.global_rho[l] / static_cast<double>(L);
      csv << "global," << tau << ',' << l << ',' << p.global_rho[l] << '\n';
    }
    csv << "global," << tau << ",all," << p.global_mean << '\n';
    res.points.push_back(std::move(p));
  }

  const auto target = opt.target_rho ? opt.target_rho : rc.sweep.target_rho;
  if (target) {
    ControllerSim sim = rc.sweep.controller;
    sim.f_target = *target;
    sim.seed = rc.seed;
    res.controller = simulate_controller(sim);
    auto cc = out.open("controller.csv");
    cc << "target,step,gap,p_tau,tau,realized\n";
    for (const auto& r : res.controller->trace)
      cc << *target << ',' << r.step << ',' << r.gap << ',' << r.p_tau << ',' << r.tau << ',' << r.realized << '\n';
    auto cs = out.open("controller_summary.csv");
    cs << "target,heldout_rho,final_tau,steps\n"
       << *target << ',' << res.controller->heldout_fraction << ',' << res.controller->final_state.tau() << ','
       << sim.steps << '\n';
  }
  return res;
}

// ---------------------------------------------------------------- trace

struct TraceOptions {
  std::optional<std::string> corpus;
  std::optional<std::string> checkpoint;
  std::optional<double> tau;
};

struct AlphaEvent {
  std::size_t seq, layer, t, head;
  double alpha;
};

struct TraceResult {
  // cum_tkv[seq][layer][t]: cached tokens up to and including t
  std::vector<std::vector<std::vector<std::size_t>>> cum_tkv;
  std::vector<AlphaEvent> resets;
};

inline TraceResult cmd_trace(const RunConfig& rc, const TraceOptions& opt, OutputDir& out) {
  if (!opt.corpus) throw ConfigError("trace: --corpus is required");
  LoadedModel lm = load_model(rc, opt.checkpoint);
  const Corpus corpus = load_corpus(*opt.corpus);
  check_corpus(corpus, lm.model);
  if (!opt.checkpoint) save_checkpoint(lm.model, lm.layers, out.path("model.ckpt"));
  const std::size_t L = lm.layers.size();
  std::vector<double> taus(L);
  for (std::size_t l = 0; l < L; ++l) taus[l] = opt.tau ? *opt.tau : lm.layers[l].cfg.tau_value();

  TraceResult res;
  auto tr = out.open("trace.csv");
  tr << "seq,layer,t,doc_id,score,raw_score,selected,cum_tkv\n";
  auto ar = out.open("alpha_resets.csv");
  ar << "seq,layer,t,head,alpha\n";
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    const auto& s = corpus.sequences[i];
    const StackOutput so = stack_forward(lm.layers, s.embeddings, s.meta(), &taus);
    res.cum_tkv.emplace_back(L);
    for (std::size_t l = 0; l < L; ++l) {
      std::size_t cum = 0;
      const LayerOutput& lo = so.layers[l];
      for (std::size_t t = 0; t < s.embeddings.size(); ++t) {
        const auto& d = lo.decisions[t];
        cum += d.selected;
        res.cum_tkv[i][l].push_back(cum);
        tr << i << ',' << l << ',' << t << ',' << s.doc_ids[t] << ',' << d.score << ',' << d.raw_score << ','
           << int(d.selected) << ',' << cum << '\n';
        for (std::size_t h = 0; h < lo.trace.scalars[t].size(); ++h) {
          const double a = lo.trace.scalars[t][h].alpha;
          if (a < rc.trace.alpha_reset) {
            res.resets.push_back({i, l, t, h, a});
            ar << i << ',' << l << ',' << t << ',' << h << ',' << a << '\n';
          }
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------- niah

struct NiahRun {
  std::vector<NiahResult> seeds;
  double spike_fraction = 0.0;
};

inline NiahRun cmd_niah(const RunConfig& rc, OutputDir& out) {
  NiahRun run;
  Corpus corpus;
  corpus.d = rc.niah.spec.embed_dim;
  auto sc = out.open("niah_scores.csv");
  sc << "seed,t,needle,score\n";
  auto sm = out.open("niah_summary.csv");
  sm << "seed,needle_mean,pattern_p95,spike\n";
  for (std::size_t k = 0; k < rc.niah.seeds; ++k) {
    const std::uint64_t seed = rc.seed + k;
    NiahSpec spec = rc.niah.spec;
    spec.seed = seed;
    const NiahSequence seq = gen_niah(spec);
    const NiahResult r = run_niah_seed(rc.niah.spec, seed);
    for (std::size_t t = 0; t < spec.T; ++t) sc << seed << ',' << t << ',' << int(seq.needle[t]) << ',' << r.scores[t] << '\n';
    sm << seed << ',' << r.needle_mean << ',' << r.pattern_p95 << ',' << int(r.spike) << '\n';
    run.spike_fraction += r.spike ? 1.0 / static_cast<double>(rc.niah.seeds) : 0.0;
    run.seeds.push_back(r);
    corpus.sequences.push_back({std::vector<long>(spec.T, static_cast<long>(k)), seq.embeddings});
  }
  save_corpus(corpus, out.path("niah_corpus.bin"));
  return run;
}

}  // namespace ham
