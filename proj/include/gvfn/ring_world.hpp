#pragma once

#include <cstddef>
#include <utility>

#include "gvfn/numerics.hpp"
#include "gvfn/transition.hpp"

namespace gvfn {

/// Position 1..6 on the ring; only position 6 is observable.
struct RingState {
  int position = 1;
  friend bool operator==(const RingState&, const RingState&) = default;
};

Vector ring_observation(const RingState& s);

std::pair<RingState, Vector> ring_step(const RingState& s, int action);

/// The six-bit observed after `depth` steps of persistent `direction`.
double ring_oracle(const RingState& s, std::size_t depth, int direction);

/// Ring plus the uniformly random behavior.
class RingWorld {
 public:
  explicit RingWorld(RingState start = {});
  Transition step(Rng& rng);
  const RingState& state() const { return state_; }
  const Vector& observation() const { return obs_; }

 private:
  RingState state_;
  Vector obs_;
};

}  // namespace gvfn
