#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gvfn/gvfn_core.hpp"
#include "gvfn/numerics.hpp"

namespace gvfn {

/// One recurrent step: z = [input; previous state], the action that selected W_a, and the
/// pre-activation W_a z recorded when the step was taken.
struct StepRecord {
  Vector z;
  int action = 0;
  Vector pre;
};

/// The last `capacity` steps, oldest first.
class TruncationBuffer {
 public:
  explicit TruncationBuffer(std::size_t capacity = 1);

  void push(StepRecord rec);
  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const StepRecord& back() const { return records_.back(); }
  const std::vector<StepRecord>& records() const { return records_; }

  /// The most recent min(p, size) records, excluding the newest `skip_newest`.
  std::span<const StepRecord> window(std::size_t p, std::size_t skip_newest = 0) const;

 private:
  std::size_t capacity_;
  std::vector<StepRecord> records_;
};

StepRecord make_record(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                       int action);

/// Forward pass over a window from its (frozen) starting state under `params`.
struct WindowPass {
  std::vector<Vector> z;
  std::vector<std::size_t> block;
  std::vector<Vector> d1;
  std::vector<Vector> d2;
  Vector final_state;
};

WindowPass forward_window(const GvfnParams& params, std::span<const StepRecord> window);

/// v^T Phi: gradient of v . s_end w.r.t. theta under truncation at the window start.
Vector vjp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> v);

/// Phi w: directional derivative of s_end along w.
Vector jvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w);

/// sum_j c_j (d^2 s_end,j / d theta^2) w, by forward-over-reverse differentiation.
Vector contracted_hvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w,
                      std::span<const double> c);

/// Full n x |theta| sensitivity of s_end, one reverse sweep per unit.
Matrix bptt_sensitivities(const GvfnParams& params, std::span<const StepRecord> window);
Matrix bptt_sensitivities(const TruncationBuffer& buffer, const GvfnParams& params);

/// Forward-accumulated sensitivities plus the R-operator companions along `probe`.
struct SensitivityState {
  Matrix phi;     // d s / d theta
  Vector xi;      // phi * probe
  Matrix r_phi;   // R_probe{phi}
  Vector probe;

  static SensitivityState zeros(const GvfnParams& params);
  static SensitivityState zeros(const GvfnParams& params, Vector probe);
};

/// Untruncated forward sensitivity update for one step with z = [input; prev state].
SensitivityState rtrl_step(const SensitivityState& prev, const GvfnParams& params, std::span<const double> z,
                           std::span<const double> pre, int action);

/// Rows j are (d^2 s_end,j / d theta^2) w, from the forward R-operator recursion over the window.
Matrix hvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w);

}  // namespace gvfn
