#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvfn/config.hpp"
#include "gvfn/eval.hpp"

namespace gvfn {

struct MetricRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  std::string metric;
  std::optional<double> value;  // empty: undefined for that window
};

/// Outcome of one (config, seed) run.
struct RunResult {
  std::string run_id;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<MetricRow> rows;
  // The experiment's selection metric ("rmsve", "nrmse", ...) and its last defined window value.
  std::string primary_metric;
  std::optional<double> final_value;
  // Extra scalar outcomes (percent-correct, pruning statistics, ...).
  std::map<std::string, double> summary;
};

/// Invoked every `every` steps with the step count; for progress output only.
using ProgressFn = std::function<void(std::size_t step)>;

/// Runs one seed of `cfg`. Numerical failures are caught and reported in the result.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {});

/// Appends the rows of `series` under `metric`.
void append_series(std::vector<MetricRow>& rows, const std::string& run_id, std::uint64_t seed,
                   const std::string& metric, const MetricSeries& series);

}  // namespace gvfn
