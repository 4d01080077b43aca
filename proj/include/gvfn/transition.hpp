#pragma once

#include <cstddef>

#include "gvfn/numerics.hpp"

namespace gvfn {

/// One step of experience: o_t, a_t, o_{t+1} and the behavior's probability of a_t.
struct Transition {
  Vector prev_obs;
  int action = 0;
  Vector next_obs;
  double mu = 1.0;
  // Running max |o| used by normalized stimulus cumulants; 1 when unused.
  double obs_scale = 1.0;
};

namespace compass {

inline constexpr int kNumColors = 5;
inline constexpr int kNumActions = 3;

enum Color : int { kOrange = 0, kYellow = 1, kRed = 2, kBlue = 3, kGreen = 4 };
enum Action : int { kForward = 0, kLeft = 1, kRight = 2 };

inline constexpr std::size_t seen_bit(int color) { return static_cast<std::size_t>(2 * color); }
inline constexpr std::size_t other_bit(int color) { return static_cast<std::size_t>(2 * color + 1); }
inline constexpr std::size_t action_bit(int action) {
  return static_cast<std::size_t>(2 * kNumColors + action);
}
inline constexpr std::size_t kObsSize = 2 * kNumColors + kNumActions;

const char* color_name(int color);

}  // namespace compass

namespace ring {

inline constexpr int kNumStates = 6;
inline constexpr int kNumActions = 2;
enum Action : int { kLeft = 0, kRight = 1 };
inline constexpr std::size_t kSixBit = 0;
inline constexpr std::size_t kNotSixBit = 1;
inline constexpr std::size_t kObsSize = 2;

}  // namespace ring

}  // namespace gvfn
