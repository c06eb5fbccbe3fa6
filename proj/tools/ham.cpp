// Copyright 2026 The HAM Authors. Apache 2.0 License.
//
// ham cost|trace|sweep|niah: writes CSV/JSON data files and manifest.json.
// Exit codes: 0 success, 2 configuration error, 3 numeric error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ham/analysis.hpp"

namespace {

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "ham_out";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--seed", c.seed, "Seed (overrides the config)");
  app->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
}

ham::RunConfig resolve(const Common& c) {
  ham::RunConfig rc = c.config ? ham::load_config(*c.config) : ham::RunConfig{};
  if (c.seed) rc.seed = *c.seed;
  return rc;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid associative memory analysis tools"};
  app.require_subcommand(1);
  Common common;

  auto* cost = app.add_subcommand("cost", "Parameter, FLOP and memory tables");
  std::optional<std::string> family;
  std::optional<double> T;
  bool itemize = false;
  add_common(cost, common);
  cost->add_option("--family", family, "ham, gdn, transformer or gdn-gsa (default: all)");
  cost->add_option("--T", T, "Sequence length (overrides cost.T)");
  cost->add_flag("--itemize", itemize, "Also write one row per cost-table row");

  auto* sweep = app.add_subcommand("sweep", "Realized KV fraction versus threshold");
  std::optional<std::string> corpus, checkpoint;
  std::optional<double> target_rho, tau;
  add_common(sweep, common);
  sweep->add_option("--corpus", corpus, "Embedding corpus (default: synthetic)");
  sweep->add_option("--checkpoint", checkpoint, "Weight checkpoint (default: seeded init)");
  sweep->add_option("--target-rho", target_rho, "Also run the threshold controller toward this fraction");

  auto* trace = app.add_subcommand("trace", "KV growth, routing scores and decay resets");
  add_common(trace, common);
  trace->add_option("--corpus", corpus, "Embedding corpus")->required();
  trace->add_option("--checkpoint", checkpoint, "Weight checkpoint (default: seeded init)");
  trace->add_option("--tau", tau, "Fixed threshold for every layer");

  auto* niah = app.add_subcommand("niah", "Routing scores on synthetic needle sequences");
  add_common(niah, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const ham::RunConfig rc = resolve(common);
    ham::OutputDir out(common.out_dir, rc, command_line(argc, argv));
    if (cost->parsed()) {
      ham::CostOptions opt;
      if (family) opt.family = ham::cost::parse_family(*family);
      opt.T = T;
      if (itemize) opt.itemize = true;
      for (const auto& e : ham::cmd_cost(rc, opt, out)) {
        std::printf("%-12s params %.4gM  training %.4f zFLOPs", ham::cost::family_name(e.family), e.params / 1e6,
                    e.training_flops / ham::cost::kZetta);
        if (e.delta_vs_ham) std::printf("  (%+.1f%% vs HAM)", 100 * *e.delta_vs_ham);
        std::printf("\n");
      }
    } else if (sweep->parsed()) {
      const auto res = ham::cmd_sweep(rc, {corpus, checkpoint, target_rho}, out);
      for (const auto& p : res.points) std::printf("tau %.4f  global rho %.4f\n", p.tau, p.global_mean);
      if (res.controller)
        std::printf("controller: held-out rho %.4f at tau %.4f\n", res.controller->heldout_fraction,
                    res.controller->final_state.tau());
    } else if (trace->parsed()) {
      const auto res = ham::cmd_trace(rc, {corpus, checkpoint, tau}, out);
      std::printf("%zu sequences traced, %zu decay resets\n", res.cum_tkv.size(), res.resets.size());
    } else if (niah->parsed()) {
      const auto res = ham::cmd_niah(rc, out);
      std::printf("needle spike in %.0f%% of %zu seeds\n", 100 * res.spike_fraction, res.seeds.size());
    }
    out.finish();
  } catch (const ham::NumericError& e) {
    std::cerr << "numeric error at position " << e.position() << ": " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
