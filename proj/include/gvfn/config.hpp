#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gvfn/compass_world.hpp"
#include "gvfn/gvf_spec.hpp"
#include "gvfn/gvfn_core.hpp"
#include "gvfn/rnn_baselines.hpp"
#include "gvfn/td_learners.hpp"
#include "gvfn/timeseries.hpp"

namespace gvfn {

using Json = nlohmann::json;

/// Invalid configuration; field() is the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { kTimeseriesMg, kTimeseriesMso, kCompassWorld, kRingWorld, kTabularCheck, kDiscovery };
enum class LearnerKind { kRtd, kRgtd, kSupervisedRnn, kSupervisedGru, kAuxRnn, kForecast };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);
LearnerKind parse_learner_kind(const std::string& name);
std::string to_string(LearnerKind kind);

struct NetworkConfig {
  std::string family = "terminating-horizon";
  Activation activation;
  PredefinedParams params;
  // forecast horizons (compass forecast network)
  std::vector<std::size_t> horizons = {1, 2, 3, 4, 5, 6, 7, 8};
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kRtd;
  std::size_t truncation = 1;
  OptimizerKind optimizer = OptimizerKind::kConstant;
  double alpha = 0.1;
  double beta = 0.01;
  std::size_t batch = 1;
  double clip_norm = 0.0;
  // recurrent baselines; supervised-rnn/-gru fix the cell, aux-rnn reads it
  std::size_t hidden = 32;
  CellKind cell = CellKind::kGru;
};

/// The prediction head on top of the learned state.
struct HeadConfig {
  std::size_t hidden = 32;
  double alpha = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
};

struct CompassConfig {
  int width = 8;
  int height = 8;
  BehaviorConfig behavior;
};

struct DiscoverySettings {
  std::size_t interval = 100000;
  double fraction = 0.1;
  bool regenerate = true;
  std::size_t noise = 20;
  double noise_variance = 1.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kCompassWorld;
  std::string run_id = "run";
  std::vector<std::uint64_t> seeds = {1};
  std::size_t steps = 100000;
  std::size_t window = 10000;
  std::string output_dir = "out";
  NetworkConfig network;
  LearnerConfig learner;
  HeadConfig head;
  CompassConfig compass;
  SeriesConfig series;
  DiscoverySettings discovery;
  std::size_t tabular_models = 200;
  // dotted path -> candidate values
  std::vector<std::pair<std::string, std::vector<Json>>> sweep;
  // the document this was parsed from, sweep removed
  Json source;
};

/// Parses and validates; unknown keys are rejected.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

/// Sets a dotted path ("learner.alpha") inside `doc`, creating objects as needed.
void set_path(Json& doc, const std::string& path, const Json& value);

struct SweepCell {
  std::string label;  // "learner.alpha=0.1,learner.truncation=2"
  std::vector<std::pair<std::string, Json>> overrides;
  ExperimentConfig config;
};

/// Cartesian product of the sweep grid (one cell when there is none), in row-major order.
std::vector<SweepCell> expand_sweep(const ExperimentConfig& cfg);

/// The step-size grid 0.1 * 1.5^i for i in [lo, hi].
std::vector<double> geometric_alpha_grid(int lo = -10, int hi = 5);

}  // namespace gvfn
