#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "gvfn/gvfn_core.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/sensitivities.hpp"
#include "gvfn/td_learners.hpp"

namespace gvfn {

struct ForecastOptions {
  std::size_t truncation = 1;
  std::vector<std::size_t> horizons = {1, 2, 3, 4, 5, 6, 7, 8};
  // Observation entries forecast by the units; unit (b, k) sits at b * |horizons| + k.
  std::vector<std::size_t> target_bits;
  double alpha = 0.1;
  OptimizerKind optimizer = OptimizerKind::kConstant;
  std::size_t batch = 1;
  double clip_norm = 0.0;
};

/// Observation bits c = 0..4 seen in Compass World: the default forecast targets.
std::vector<std::size_t> compass_color_bits();

/// Recurrent layer whose units regress k-step-ahead observation bits.
///
/// Keeps p + max(K) records. Each step the window of p records ending max(K) steps ago is
/// replayed, and unit (b, k) is pulled toward bit b observed k steps after the window's end.
/// The carried state always reflects the newest input.
class ForecastLearner {
 public:
  ForecastLearner(GvfnParams params, ForecastOptions opts);

  /// `input` is the bias-extended observation the layer reads, `obs` the raw observation the
  /// targets are drawn from. Returns false while the buffer is still filling.
  bool step(std::span<const double> input, int action, std::span<const double> obs);

  const Vector& state() const { return state_; }
  const GvfnParams& params() const { return params_; }
  const ForecastOptions& options() const { return opts_; }
  std::uint64_t steps() const { return steps_; }
  /// Per-unit residual (target - prediction) of the last update.
  const Vector& last_error() const { return last_error_; }

 private:
  GvfnParams params_;
  ForecastOptions opts_;
  std::size_t max_k_ = 0;
  std::deque<StepRecord> records_;
  std::deque<Vector> bits_;
  Vector state_;
  Vector last_error_;
  Vector accum_;
  std::size_t accum_count_ = 0;
  AdamState adam_;
  std::uint64_t steps_ = 0;
};

}  // namespace gvfn
