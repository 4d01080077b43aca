#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvfn/compass_world.hpp"
#include "gvfn/gvf_spec.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/td_head.hpp"
#include "gvfn/td_learners.hpp"

namespace gvfn {

/// Relative draw weights for each primitive family.
struct PrimitiveWeights {
  double myopic = 1.0;
  double horizon = 1.0;
  double termination = 1.0;
  double stimulus = 1.0;
  double compositional = 1.0;
  double random_cumulant = 1.0;
  double random_policy = 1.0;
  double persistent_policy = 1.0;
};

struct GeneratorConfig {
  PrimitiveWeights weights;
  // Observation entries a stimulus cumulant may read.
  std::vector<std::size_t> stimulus_indices;
  // Observation entries whose activation ends a termination discount.
  std::vector<std::size_t> terminal_obs;
  int num_actions = 1;
  // Random cumulant variance is drawn from U(0, max_variance].
  double max_variance = 1.0;
};

/// Compass World primitives: color bits as stimuli and terminal events, three actions.
GeneratorConfig compass_generator_config();

/// A question assembled from independently drawn primitives. Compositional cumulants point at a
/// uniformly drawn member of `pool`; with an empty pool a stimulus is used instead.
GvfQuestion generate_gvf(Rng& rng, const GeneratorConfig& cfg, const NetworkSpec& pool);

/// Algorithm 1: the floor(n eps) GVF columns with the smallest sum over tasks of |weight|, in
/// ascending magnitude (ties to the lower index). Columns with is_gvf false are never chosen;
/// an empty mask marks every column as a GVF.
std::vector<std::size_t> evaluate_and_prune(const Matrix& task_weights, double eps,
                                            const std::vector<bool>& is_gvf = {});

/// `indices` plus every GVF whose cumulant depends on them, transitively; sorted.
std::vector<std::size_t> close_under_dependents(const NetworkSpec& spec, const std::vector<std::size_t>& indices);

/// The spec without `indices`; composition terms are renumbered. Throws SpecError if a kept
/// GVF still references a removed one.
NetworkSpec remove_gvfs(const NetworkSpec& spec, const std::vector<std::size_t>& indices);

NetworkSpec append_gvfs(const NetworkSpec& spec, const std::vector<GvfQuestion>& extra);

/// Seed pool for the pruning check: per color myopic-forward, leap and the two turn-then-leap
/// questions (20), followed by `noise` random-cumulant questions.
NetworkSpec discovery_seed_pool(std::size_t noise, double noise_variance);

struct DiscoveryConfig {
  std::size_t prune_interval = 100000;
  double prune_fraction = 0.1;
  bool regenerate = true;
  GeneratorConfig generator = compass_generator_config();
};

struct PoolEvent {
  std::size_t step = 0;
  std::size_t pool_before = 0;
  std::size_t pool_after = 0;
  // Labels and kinds of the pruned questions, in pruning order.
  std::vector<std::string> pruned_labels;
  std::vector<std::string> pruned_kinds;
  std::size_t pruned_noise = 0;
  std::size_t generated = 0;
  std::map<std::string, std::size_t> kind_histogram;
  std::optional<double> rmsve;
};

struct DiscoveryHistory {
  std::vector<PoolEvent> events;
  std::vector<std::pair<std::size_t, double>> rmsve;  // (step, windowed RMSVE of the head)
};

/// Trains `learner` and `head` on Compass World, pruning every prune_interval steps by the head's
/// task weights. Dependents of a pruned GVF are pruned with it; replacements (when enabled) match
/// the number removed. `metric_window` sets the RMSVE window.
DiscoveryHistory discovery_loop(CompassWorld& env, GvfnLearner& learner, TdHead& head, const DiscoveryConfig& cfg,
                                std::size_t total_steps, std::size_t metric_window, Rng& rng);

}  // namespace gvfn
