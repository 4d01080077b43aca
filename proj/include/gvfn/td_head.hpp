#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gvfn/gvf_spec.hpp"
#include "gvfn/gvfn_core.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/td_learners.hpp"

namespace gvfn {

struct TdHeadOptions {
  // 0 gives a linear head on [x; 1]; otherwise relu(x F + b_F) W + b_W.
  std::size_t hidden = 32;
  double alpha = 0.01;
  OptimizerKind optimizer = OptimizerKind::kConstant;
};

/// Predicts `spec`'s GVFs from a representation it cannot change; trained by TD on its own outputs.
class TdHead {
 public:
  TdHead(NetworkSpec spec, std::size_t inputs, TdHeadOptions opts, Rng& rng);

  Vector predict(std::span<const double> x) const;

  /// One TD step from features x_t to x_{t+1} on transition `tr`.
  void update(const Transition& tr, std::span<const double> x_t, std::span<const double> x_next, Rng& rng);

  std::size_t inputs() const { return inputs_; }
  const NetworkSpec& spec() const { return spec_; }
  const TdTerms& last_terms() const { return last_terms_; }

  /// Outgoing weights per input feature: rows are tasks (linear) or hidden units (relu),
  /// columns the input features.
  Matrix task_weights() const;

  void remove_inputs(const std::vector<std::size_t>& rows);
  /// New inputs start with zero outgoing weights.
  void add_inputs(std::size_t count);

 private:
  NetworkSpec spec_;
  std::size_t inputs_;
  TdHeadOptions opts_;
  HeadParams relu_;
  Matrix linear_;  // outputs x (inputs + 1)
  AdamState adam_;
  TdTerms last_terms_;
};

}  // namespace gvfn
