#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gvfn/config.hpp"
#include "gvfn/experiments.hpp"

namespace gvfn {

/// GVFN_WORKERS when set to a positive integer, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on `workers` threads. The first exception is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::string sha1_hex(std::string_view data);
/// Content hash as git computes it for a blob: sha1("blob <size>\0" + bytes).
std::string git_blob_sha1(std::string_view data);
/// git_blob_sha1 of the running executable, or "unknown".
std::string executable_blob_sha1();

/// One header line, then run_id,seed,step,metric,value per row; undefined values are empty.
void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows);

struct RunReport {
  std::vector<RunResult> results;  // in seed order
  double wall_clock_seconds = 0.0;
};

/// Runs every seed of `cfg` (or just `seed`) and writes metrics.csv and manifest.json into `out_dir`.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         std::optional<std::uint64_t> seed = {}, std::size_t workers = worker_count());

struct CellSummary {
  std::string label;
  double alpha = 0.0;
  std::size_t ok = 0;
  std::size_t failed_seeds = 0;
  bool failed = false;
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Mean and standard error (sample sd / sqrt(n)); a single value has zero error.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

/// Lowest mean among cells that did not fail; ties go to the smaller alpha. Empty when every cell failed.
std::optional<std::size_t> select_best(const std::vector<CellSummary>& cells);

struct SweepReport {
  std::vector<SweepCell> cells;
  std::vector<std::vector<RunResult>> results;  // [cell][seed]
  std::vector<CellSummary> summary;
  std::optional<std::size_t> best;
  double wall_clock_seconds = 0.0;
};

/// Runs all cells x seeds of `cfg`'s grid. Writes metrics.csv, summary.csv, best.json and
/// manifest.json into `out_dir` when it is non-empty.
SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, std::size_t workers = worker_count());

}  // namespace gvfn
