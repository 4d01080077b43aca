#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "gvfn/config.hpp"
#include "gvfn/runner.hpp"
#include "gvfn/tabular.hpp"
#include "gvfn/timeseries.hpp"

using namespace gvfn;

namespace {

void print_run(const RunReport& rep) {
  for (const auto& r : rep.results) {
    std::cout << "seed " << r.seed << ": ";
    if (r.failed) {
      std::cout << "FAILED (" << r.error << ")\n";
      continue;
    }
    std::cout << r.primary_metric << " = ";
    if (r.final_value) std::cout << *r.final_value; else std::cout << "undefined";
    for (const auto& [k, v] : r.summary) std::cout << ", " << k << " = " << v;
    std::cout << '\n';
  }
  std::cout << "wall clock " << rep.wall_clock_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GVF network experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run every seed of a config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out_dir, "Output directory (default: the config's output_dir)");

  auto* sweep = app.add_subcommand("sweep", "Run the config's sweep grid and pick the best cell");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory")->required();

  std::uint64_t tab_seed = 1;
  std::size_t tab_models = 200;
  auto* tab = app.add_subcommand("check-tabular", "Fixed-point suite on random acyclic models plus the divergence counterexample");
  tab->add_option("--seed", tab_seed, "Model generator seed");
  tab->add_option("--models", tab_models, "Number of random models");

  std::string kind = "mg";
  std::size_t n = 1000;
  std::string series_out;
  auto* dump = app.add_subcommand("dump-series", "Write a generated series as one CSV column");
  dump->add_option("--kind", kind, "mg or mso")->check(CLI::IsMember({"mg", "mso", "mackey-glass"}));
  dump->add_option("--n", n, "Number of samples");
  dump->add_option("--out", series_out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = load_config(config_path);
      const RunReport rep = run_experiment(cfg, out_dir.empty() ? cfg.output_dir : out_dir, seed);
      print_run(rep);
      for (const auto& r : rep.results) {
        if (r.failed) return 3;
      }
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = load_config(config_path);
      const SweepReport rep = run_sweep(cfg, out_dir);
      for (std::size_t c = 0; c < rep.summary.size(); ++c) {
        const auto& s = rep.summary[c];
        std::printf("%s%-50s mean %.6g  se %.3g  ok %zu%s\n", rep.best == c ? "* " : "  ", s.label.c_str(), s.mean,
                    s.standard_error, s.ok, s.failed ? "  FAILED" : "");
      }
      if (!rep.best) {
        std::cerr << "every cell failed\n";
        return 3;
      }
    } else if (tab->parsed()) {
      const TabularCheckReport r = run_tabular_check(tab_seed, tab_models);
      std::printf("random models: %zu, converged %zu, diverged %zu, max error %.3g\n", r.models, r.converged,
                  r.diverged, r.max_error);
      std::printf("counterexample: %s, norm ratio %.6f after %zu iterations\n",
                  r.counterexample_diverged ? "diverged" : "did not diverge", r.counterexample_ratio,
                  r.counterexample_iterations);
      return r.diverged == 0 && r.converged == r.models && r.counterexample_diverged ? 0 : 1;
    } else if (dump->parsed()) {
      SeriesConfig sc;
      sc.kind = parse_series_kind(kind);
      sc.length = n;
      sc.horizon = 0;
      const Vector y = generate_series(sc);
      if (series_out.empty()) {
        write_series_csv(std::cout, y);
      } else {
        std::ofstream out(series_out);
        if (!out) throw std::runtime_error("cannot write " + series_out);
        write_series_csv(out, y);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
