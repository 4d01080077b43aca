#include "gvfn/forecast.hpp"

#include <algorithm>
#include <stdexcept>

#include "gvfn/transition.hpp"

namespace gvfn {

std::vector<std::size_t> compass_color_bits() {
  std::vector<std::size_t> bits;
  for (int c = 0; c < compass::kNumColors; ++c) bits.push_back(compass::seen_bit(c));
  return bits;
}

ForecastLearner::ForecastLearner(GvfnParams params, ForecastOptions opts)
    : params_(std::move(params)), opts_(std::move(opts)) {
  if (opts_.truncation == 0) throw std::invalid_argument("ForecastLearner: truncation must be positive");
  if (opts_.horizons.empty() || opts_.target_bits.empty()) {
    throw std::invalid_argument("ForecastLearner: needs horizons and target bits");
  }
  if (opts_.batch == 0) throw std::invalid_argument("ForecastLearner: batch must be positive");
  for (std::size_t k : opts_.horizons) {
    if (k == 0) throw std::invalid_argument("ForecastLearner: horizons must be positive");
    max_k_ = std::max(max_k_, k);
  }
  if (params_.num_units() != opts_.horizons.size() * opts_.target_bits.size()) {
    throw DimensionError("ForecastLearner: unit count must be |bits| * |horizons|");
  }
  state_ = initial_state(params_);
  last_error_.assign(params_.num_units(), 0.0);
  accum_.assign(params_.size(), 0.0);
  adam_ = AdamState(params_.size());
}

bool ForecastLearner::step(std::span<const double> input, int action, std::span<const double> obs) {
  StepRecord rec = make_record(params_, state_, input, action);
  Vector next(params_.num_units());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = activate(params_.activation(), rec.pre[i]);
  records_.push_back(std::move(rec));
  Vector bits;
  for (std::size_t b : opts_.target_bits) bits.push_back(obs[b]);
  bits_.push_back(std::move(bits));
  const std::size_t cap = opts_.truncation + max_k_;
  if (records_.size() > cap) {
    records_.pop_front();
    bits_.pop_front();
  }
  ++steps_;
  bool updated = false;
  if (records_.size() > max_k_) {
    const std::size_t head = records_.size() - 1 - max_k_;
    const std::size_t begin = head + 1 > opts_.truncation ? head + 1 - opts_.truncation : 0;
    const std::vector<StepRecord> window(records_.begin() + static_cast<std::ptrdiff_t>(begin),
                                         records_.begin() + static_cast<std::ptrdiff_t>(head + 1));
    const Vector s = forward_window(params_, window).final_state;
    const std::size_t nk = opts_.horizons.size();
    for (std::size_t b = 0; b < opts_.target_bits.size(); ++b) {
      for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t u = b * nk + k;
        last_error_[u] = bits_[head + opts_.horizons[k]][b] - s[u];
      }
    }
    const Vector dir = vjp(params_, window, last_error_);
    auto& theta = params_.theta();
    for (std::size_t i = 0; i < theta.size(); ++i) accum_[i] += dir[i];
    if (++accum_count_ >= opts_.batch) {
      const double inv = 1.0 / static_cast<double>(accum_count_);
      for (double& x : accum_) x *= inv;
      if (opts_.clip_norm > 0.0) {
        const double nrm = norm2(accum_);
        if (nrm > opts_.clip_norm)
          for (double& x : accum_) x *= opts_.clip_norm / nrm;
      }
      if (opts_.optimizer == OptimizerKind::kAdam) {
        for (double& x : accum_) x = -x;
        adam_step(adam_, theta, accum_, opts_.alpha);
      } else {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += opts_.alpha * accum_[i];
      }
      std::fill(accum_.begin(), accum_.end(), 0.0);
      accum_count_ = 0;
      require_finite(theta, "forecast parameters");
    }
    updated = true;
  }
  state_ = std::move(next);
  return updated;
}

}  // namespace gvfn
