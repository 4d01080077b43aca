#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>

#include "gvfn/gvf_spec.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/tabular.hpp"
#include "gvfn/transition.hpp"

namespace gvfn {

namespace compass {

enum Heading : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
inline constexpr int kNoColor = -1;

}  // namespace compass

/// Latent Compass World state. y = 0 is the north row.
///
/// Wall colors: north orange, except its leftmost cell (x = 0) which is green; east yellow;
/// south red; west blue. A color is seen only when standing next to its wall facing it.
struct CompassState {
  int width = 8;
  int height = 8;
  int x = 0;
  int y = 0;
  int heading = compass::kNorth;

  bool valid() const;
  friend bool operator==(const CompassState&, const CompassState&) = default;
};

/// The color in front of the agent, or kNoColor (white).
int facing_color(const CompassState& s);

CompassState compass_move(const CompassState& s, int action);

/// Bits for one observed color (kNoColor: all zero) and the action just taken (-1: none).
Vector compass_observation(int color, int action);

struct DecodedObservation {
  int color = compass::kNoColor;
  int action = -1;
};
/// Inverse of compass_observation; throws on an inconsistent bit pattern.
DecodedObservation decode_compass_observation(std::span<const double> obs);

std::pair<CompassState, Vector> compass_step(const CompassState& s, int action);

std::size_t num_latent_states(int width, int height);
/// (y * width + x) * 4 + heading.
std::size_t latent_index(const CompassState& s);
CompassState latent_state(int width, int height, std::size_t index);

// ---- behavior -------------------------------------------------------------

enum class Macro { kNone, kForward, kLeft, kRight, kLeap, kWander };

/// kNone is a decision point. kLeap continues until a color is seen. kWander has
/// `remaining` uniformly random steps left.
struct BehaviorState {
  Macro macro = Macro::kNone;
  int remaining = 0;
};

struct BehaviorConfig {
  int wander_min = 1;
  int wander_max = 10;
};

/// Exact probability that the behavior emits `action` from `b`.
double behavior_prob(const BehaviorState& b, int action);

struct BehaviorSample {
  int action = 0;
  double mu = 1.0;
  BehaviorState next;
};

/// Draws one primitive action. Call behavior_observe with the resulting observation before
/// the next draw so a leap can end.
BehaviorSample behavior_sample(const BehaviorState& b, Rng& rng, const BehaviorConfig& cfg = {});

BehaviorState behavior_observe(BehaviorState b, bool color_seen);

/// Environment plus behavior policy, emitting Transitions.
class CompassWorld {
 public:
  explicit CompassWorld(CompassState start, BehaviorConfig cfg = {});
  static CompassWorld random_start(int width, int height, Rng& rng, BehaviorConfig cfg = {});

  Transition step(Rng& rng);

  const CompassState& state() const { return state_; }
  const BehaviorState& behavior() const { return behavior_; }
  const Vector& observation() const { return obs_; }

 private:
  CompassState state_;
  BehaviorState behavior_;
  BehaviorConfig cfg_;
  Vector obs_;
};

/// One CSV row per step: x,y,heading,action,mu,obs bits.
void write_trajectory_header(std::ostream& os);
void write_trajectory_row(std::ostream& os, const CompassState& before, const Transition& tr);

// ---- oracles --------------------------------------------------------------

/// Value of a forward-persistent question with a stimulus cumulant, by deterministic rollout.
/// Throws std::invalid_argument for any other policy or cumulant.
double compass_oracle(const CompassState& s, const GvfQuestion& q);

/// The color a forward rollout ends at; every rollout reaches a wall.
int leap_color(const CompassState& s);

/// Exact model of a compass network over all latent states.
TabularModel compass_tabular_model(int width, int height, const NetworkSpec& spec);

/// True values for every latent state (rows) and GVF (columns), by fixed-point iteration.
Matrix compass_true_values(int width, int height, const NetworkSpec& spec);

}  // namespace gvfn
