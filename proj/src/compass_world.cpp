#include "gvfn/compass_world.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gvfn {

using namespace compass;

bool CompassState::valid() const {
  return width > 0 && height > 0 && x >= 0 && x < width && y >= 0 && y < height && heading >= 0 && heading < 4;
}

int facing_color(const CompassState& s) {
  switch (s.heading) {
    case kNorth: return s.y == 0 ? (s.x == 0 ? kGreen : kOrange) : kNoColor;
    case kEast: return s.x == s.width - 1 ? kYellow : kNoColor;
    case kSouth: return s.y == s.height - 1 ? kRed : kNoColor;
    case kWest: return s.x == 0 ? kBlue : kNoColor;
    default: throw std::invalid_argument("facing_color: bad heading");
  }
}

CompassState compass_move(const CompassState& s, int action) {
  CompassState n = s;
  switch (action) {
    case kForward:
      if (facing_color(s) != kNoColor) break;
      if (s.heading == kNorth) --n.y;
      if (s.heading == kEast) ++n.x;
      if (s.heading == kSouth) ++n.y;
      if (s.heading == kWest) --n.x;
      break;
    case kLeft: n.heading = (s.heading + 3) % 4; break;
    case kRight: n.heading = (s.heading + 1) % 4; break;
    default: throw std::invalid_argument("compass_move: bad action " + std::to_string(action));
  }
  return n;
}

Vector compass_observation(int color, int action) {
  Vector o(kObsSize, 0.0);
  if (color != kNoColor) {
    for (int c = 0; c < kNumColors; ++c) o[c == color ? seen_bit(c) : other_bit(c)] = 1.0;
  }
  if (action >= 0) o[action_bit(action)] = 1.0;
  return o;
}

DecodedObservation decode_compass_observation(std::span<const double> obs) {
  if (obs.size() < kObsSize) throw DimensionError("decode_compass_observation: short observation");
  DecodedObservation d;
  int seen = 0, other = 0;
  for (int c = 0; c < kNumColors; ++c) {
    if (obs[seen_bit(c)] > 0.5) {
      d.color = c;
      ++seen;
    }
    if (obs[other_bit(c)] > 0.5) ++other;
  }
  const bool white = seen == 0 && other == 0;
  if (!white && (seen != 1 || other != kNumColors - 1 || obs[other_bit(d.color)] > 0.5)) {
    throw std::invalid_argument("decode_compass_observation: inconsistent color bits");
  }
  for (int a = 0; a < kNumActions; ++a) {
    if (obs[action_bit(a)] > 0.5) {
      if (d.action >= 0) throw std::invalid_argument("decode_compass_observation: two action bits");
      d.action = a;
    }
  }
  return d;
}

std::pair<CompassState, Vector> compass_step(const CompassState& s, int action) {
  CompassState n = compass_move(s, action);
  return {n, compass_observation(facing_color(n), action)};
}

std::size_t num_latent_states(int width, int height) { return static_cast<std::size_t>(width * height * 4); }

std::size_t latent_index(const CompassState& s) {
  return static_cast<std::size_t>((s.y * s.width + s.x) * 4 + s.heading);
}

CompassState latent_state(int width, int height, std::size_t index) {
  if (index >= num_latent_states(width, height)) throw std::out_of_range("latent_state: index");
  const int i = static_cast<int>(index);
  return CompassState{width, height, (i / 4) % width, (i / 4) / width, i % 4};
}

// ---- behavior -------------------------------------------------------------

namespace {

constexpr double kMacroProb = 1.0 / 5.0;
constexpr double kUniform = 1.0 / kNumActions;

}  // namespace

double behavior_prob(const BehaviorState& b, int action) {
  if (action < 0 || action >= kNumActions) throw std::invalid_argument("behavior_prob: bad action");
  switch (b.macro) {
    case Macro::kNone: {
      // forward, left, right, leap (forward first), wander (uniform first)
      double p = kMacroProb * kUniform;
      if (action == kForward) p += 2 * kMacroProb;
      else p += kMacroProb;
      return p;
    }
    case Macro::kLeap: return action == kForward ? 1.0 : 0.0;
    case Macro::kWander: return kUniform;
    default: throw std::invalid_argument("behavior_prob: single-step macros never persist");
  }
}

BehaviorSample behavior_sample(const BehaviorState& b, Rng& rng, const BehaviorConfig& cfg) {
  std::uniform_int_distribution<int> prim(0, kNumActions - 1);
  BehaviorSample out;
  switch (b.macro) {
    case Macro::kNone: {
      switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0: out.action = kForward; break;
        case 1: out.action = kLeft; break;
        case 2: out.action = kRight; break;
        case 3:
          out.action = kForward;
          out.next = {Macro::kLeap, 0};
          break;
        default: {
          const int k = std::uniform_int_distribution<int>(cfg.wander_min, cfg.wander_max)(rng);
          out.action = prim(rng);
          if (k > 1) out.next = {Macro::kWander, k - 1};
        }
      }
      break;
    }
    case Macro::kLeap:
      out.action = kForward;
      out.next = b;
      break;
    case Macro::kWander:
      if (b.remaining <= 0) throw std::invalid_argument("behavior_sample: wander with no steps left");
      out.action = prim(rng);
      if (b.remaining > 1) out.next = {Macro::kWander, b.remaining - 1};
      break;
    default: throw std::invalid_argument("behavior_sample: single-step macros never persist");
  }
  out.mu = behavior_prob(b, out.action);
  return out;
}

BehaviorState behavior_observe(BehaviorState b, bool color_seen) {
  if (b.macro == Macro::kLeap && color_seen) return {};
  return b;
}

CompassWorld::CompassWorld(CompassState start, BehaviorConfig cfg) : state_(start), cfg_(cfg) {
  if (!state_.valid()) throw std::invalid_argument("CompassWorld: invalid start state");
  if (cfg_.wander_min < 1 || cfg_.wander_max < cfg_.wander_min) {
    throw std::invalid_argument("CompassWorld: bad wander bounds");
  }
  obs_ = compass_observation(facing_color(state_), -1);
}

CompassWorld CompassWorld::random_start(int width, int height, Rng& rng, BehaviorConfig cfg) {
  const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, num_latent_states(width, height) - 1)(rng);
  return CompassWorld(latent_state(width, height, idx), cfg);
}

Transition CompassWorld::step(Rng& rng) {
  const BehaviorSample bs = behavior_sample(behavior_, rng, cfg_);
  auto [next, obs] = compass_step(state_, bs.action);
  Transition tr{obs_, bs.action, obs, bs.mu, 1.0};
  state_ = next;
  obs_ = std::move(obs);
  behavior_ = behavior_observe(bs.next, facing_color(state_) != kNoColor);
  return tr;
}

void write_trajectory_header(std::ostream& os) {
  os << "x,y,heading,action,mu";
  for (std::size_t i = 0; i < kObsSize; ++i) os << ",o" << i;
  os << '\n';
}

void write_trajectory_row(std::ostream& os, const CompassState& before, const Transition& tr) {
  os << before.x << ',' << before.y << ',' << before.heading << ',' << tr.action << ',' << tr.mu;
  for (double v : tr.next_obs) os << ',' << v;
  os << '\n';
}

// ---- oracles --------------------------------------------------------------

int leap_color(const CompassState& s) {
  CompassState cur = s;
  for (;;) {
    cur = compass_move(cur, kForward);
    const int c = facing_color(cur);
    if (c != kNoColor) return c;
  }
}

double compass_oracle(const CompassState& s, const GvfQuestion& q) {
  const auto* pol = std::get_if<PersistentPolicy>(&q.policy);
  if (pol == nullptr || pol->action != kForward) {
    throw std::invalid_argument("compass_oracle: rollout needs the forward-persistent policy");
  }
  if (!std::holds_alternative<StimulusCumulant>(q.cumulant)) {
    throw std::invalid_argument("compass_oracle: rollout needs a stimulus cumulant");
  }
  const NetworkSpec one({q});
  CompassState cur = s;
  Vector obs = compass_observation(facing_color(cur), -1);
  double value = 0.0, discount = 1.0;
  for (;;) {
    auto [next, next_obs] = compass_step(cur, kForward);
    const Transition tr{obs, kForward, next_obs, 1.0, 1.0};
    const double c = cumulant_value(one, 0, tr, {});
    const double g = continuation_value(one, 0, tr);
    value += discount * c;
    if (next == cur) {
      // Blocked against a wall: the same transition repeats forever.
      if (g == 0.0) return value;
      if (g >= 1.0) {
        if (c != 0.0) throw std::domain_error("compass_oracle: unbounded return");
        return value;
      }
      return value + discount * g * c / (1.0 - g);
    }
    discount *= g;
    if (discount == 0.0) return value;
    cur = next;
    obs = std::move(next_obs);
  }
}

TabularModel compass_tabular_model(int width, int height, const NetworkSpec& spec) {
  const std::size_t h = num_latent_states(width, height);
  TabularModel m;
  m.num_states = h;
  m.edges = spec.edges();
  m.d.assign(h, 1.0 / static_cast<double>(h));
  // The observation before a transition does not affect stimulus cumulants or continuations.
  const Vector no_values(spec.size(), 0.0);
  for (std::size_t j = 0; j < spec.size(); ++j) {
    Matrix pg(h, h), pp(h, h);
    Vector c(h, 0.0);
    const bool random_cumulant = std::holds_alternative<RandomCumulant>(spec.gvf(j).cumulant);
    for (std::size_t i = 0; i < h; ++i) {
      const CompassState s = latent_state(width, height, i);
      const Vector prev = compass_observation(facing_color(s), -1);
      for (int a = 0; a < kNumActions; ++a) {
        const double pi = target_policy_prob(spec, j, a);
        if (pi == 0.0) continue;
        auto [next, obs] = compass_step(s, a);
        const Transition tr{prev, a, obs, 1.0, 1.0};
        const std::size_t k = latent_index(next);
        pp(i, k) += pi;
        pg(i, k) += pi * continuation_value(spec, j, tr);
        if (!random_cumulant) c[i] += pi * cumulant_value(spec, j, tr, no_values);
      }
    }
    m.p_gamma.push_back(std::move(pg));
    m.p_pi.push_back(std::move(pp));
    m.cumulant.push_back(std::move(c));
  }
  m.validate();
  return m;
}

Matrix compass_true_values(int width, int height, const NetworkSpec& spec) {
  const TabularModel m = compass_tabular_model(width, height, spec);
  const auto r = fixed_point_iterate(m, ValueTable(m.num_gvfs() * m.num_states, 0.0), 1e-12, 100000);
  if (!r.converged) throw ConvergenceError("compass_true_values: fixed point not reached", r.norms.back());
  Matrix out(m.num_states, m.num_gvfs());
  for (std::size_t j = 0; j < m.num_gvfs(); ++j)
    for (std::size_t i = 0; i < m.num_states; ++i) out(i, j) = r.value[j * m.num_states + i];
  return out;
}

}  // namespace gvfn
