#include "gvfn/ring_world.hpp"

#include <stdexcept>

namespace gvfn {

Vector ring_observation(const RingState& s) {
  if (s.position < 1 || s.position > ring::kNumStates) throw std::invalid_argument("ring_observation: position");
  Vector o(ring::kObsSize, 0.0);
  o[s.position == ring::kNumStates ? ring::kSixBit : ring::kNotSixBit] = 1.0;
  return o;
}

std::pair<RingState, Vector> ring_step(const RingState& s, int action) {
  if (action != ring::kLeft && action != ring::kRight) throw std::invalid_argument("ring_step: bad action");
  const int zero_based = s.position - 1 + (action == ring::kRight ? 1 : ring::kNumStates - 1);
  RingState n{zero_based % ring::kNumStates + 1};
  return {n, ring_observation(n)};
}

double ring_oracle(const RingState& s, std::size_t depth, int direction) {
  if (depth == 0) throw std::invalid_argument("ring_oracle: depth must be positive");
  RingState cur = s;
  for (std::size_t k = 0; k < depth; ++k) cur = ring_step(cur, direction).first;
  return cur.position == ring::kNumStates ? 1.0 : 0.0;
}

RingWorld::RingWorld(RingState start) : state_(start), obs_(ring_observation(start)) {}

Transition RingWorld::step(Rng& rng) {
  const int a = std::uniform_int_distribution<int>(0, ring::kNumActions - 1)(rng);
  auto [next, obs] = ring_step(state_, a);
  Transition tr{obs_, a, obs, 1.0 / ring::kNumActions, 1.0};
  state_ = next;
  obs_ = std::move(obs);
  return tr;
}

}  // namespace gvfn
