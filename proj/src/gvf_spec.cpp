#include "gvfn/gvf_spec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

namespace gvfn {

namespace compass {

const char* color_name(int color) {
  static constexpr const char* kNames[] = {"orange", "yellow", "red", "blue", "green"};
  if (color < 0 || color >= kNumColors) return "?";
  return kNames[color];
}

}  // namespace compass

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string describe_cycle(const std::vector<std::size_t>& cycle) {
  std::ostringstream os;
  os << "composition graph has a cycle:";
  for (std::size_t v : cycle) os << ' ' << v;
  return os.str();
}

std::vector<std::size_t> all_colors_terminal() {
  std::vector<std::size_t> out;
  for (int c = 0; c < compass::kNumColors; ++c) out.push_back(compass::seen_bit(c));
  return out;
}

StimulusCumulant color_bit(int color) {
  return StimulusCumulant{compass::seen_bit(color), StimulusCriterion::kAbove, 0.5, 1.0, false};
}

}  // namespace

CycleError::CycleError(std::vector<std::size_t> cycle)
    : std::runtime_error(describe_cycle(cycle)), cycle_(std::move(cycle)) {}

NetworkSpec::NetworkSpec(std::vector<GvfQuestion> gvfs, std::optional<std::size_t> obs_dim)
    : gvfs_(std::move(gvfs)) {
  const std::size_t n = gvfs_.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& q = gvfs_[j];
    const std::string where = "gvf " + std::to_string(j);
    std::visit(Overloaded{
                   [&](const PersistentPolicy& p) {
                     if (p.action < 0) throw SpecError(where + ": negative persistent action");
                   },
                   [&](const UniformRandomPolicy& p) {
                     if (p.num_actions < 1) throw SpecError(where + ": uniform policy needs actions");
                   },
                   [](const FixedStreamPolicy&) {},
               },
               q.policy);
    std::visit(Overloaded{
                   [&](const StimulusCumulant& c) {
                     if (obs_dim && c.obs_index >= *obs_dim) {
                       throw SpecError(where + ": stimulus index out of range");
                     }
                     if (!std::isfinite(c.scale) || !std::isfinite(c.threshold)) {
                       throw SpecError(where + ": stimulus scale not finite");
                     }
                   },
                   [&](const CompositionalCumulant& c) {
                     for (const auto& t : c.terms) {
                       if (t.gvf >= n) throw SpecError(where + ": compositional reference out of range");
                       if (!std::isfinite(t.weight)) throw SpecError(where + ": weight not finite");
                       edges_.push_back({j, t.gvf, t.weight});
                     }
                   },
                   [&](const RandomCumulant& c) {
                     if (!(c.variance >= 0.0) || !std::isfinite(c.variance)) {
                       throw SpecError(where + ": random cumulant variance invalid");
                     }
                   },
               },
               q.cumulant);
    std::visit(Overloaded{
                   [&](const ConstantContinuation& c) {
                     if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw SpecError(where + ": gamma outside [0,1]");
                   },
                   [&](const TerminatingContinuation& c) {
                     if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw SpecError(where + ": gamma outside (0,1]");
                     for (std::size_t idx : c.terminal_obs) {
                       if (obs_dim && idx >= *obs_dim) throw SpecError(where + ": terminal index out of range");
                     }
                   },
               },
               q.continuation);
  }
}

std::vector<std::size_t> topological_order(const NetworkSpec& spec) {
  const std::size_t n = spec.size();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : spec.edges()) {
    out[e.from].push_back(e.to);
    indegree[e.to] += 1;
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() == n) return order;

  // Every leftover vertex has a leftover predecessor, so walking backwards must revisit one.
  std::vector<std::vector<std::size_t>> in(n);
  for (const auto& e : spec.edges()) {
    if (indegree[e.to] > 0 && indegree[e.from] > 0) in[e.to].push_back(e.from);
  }
  std::size_t start = 0;
  while (indegree[start] == 0) ++start;
  std::vector<int> seen_at(n, -1);
  std::vector<std::size_t> walk;
  std::size_t v = start;
  while (seen_at[v] < 0) {
    seen_at[v] = static_cast<int>(walk.size());
    walk.push_back(v);
    v = *std::min_element(in[v].begin(), in[v].end());
  }
  std::vector<std::size_t> cycle(walk.begin() + seen_at[v], walk.end());
  std::reverse(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
  throw CycleError(std::move(cycle));
}

double cumulant_value(const NetworkSpec& spec, std::size_t j, const Transition& tr,
                      std::span<const double> next_values, Rng* rng) {
  const auto& q = spec.gvf(j);
  return std::visit(
      Overloaded{
          [&](const StimulusCumulant& c) {
            if (c.obs_index >= tr.next_obs.size()) throw DimensionError("stimulus index beyond observation");
            const double o = tr.next_obs[c.obs_index];
            double v = o;
            if (c.criterion == StimulusCriterion::kAbove) v = o > c.threshold ? 1.0 : 0.0;
            if (c.criterion == StimulusCriterion::kEquals) v = std::abs(o - c.threshold) < 1e-12 ? 1.0 : 0.0;
            v *= c.scale;
            if (c.normalize) v /= tr.obs_scale;
            return v;
          },
          [&](const CompositionalCumulant& c) {
            double v = 0.0;
            for (const auto& t : c.terms) {
              if (t.gvf >= next_values.size()) throw DimensionError("next_values too short");
              v += t.weight * next_values[t.gvf];
            }
            return v;
          },
          [&](const RandomCumulant& c) {
            if (rng == nullptr) throw std::invalid_argument("random cumulant needs an rng");
            std::normal_distribution<double> dist(0.0, std::sqrt(c.variance));
            return dist(*rng);
          },
      },
      q.cumulant);
}

double continuation_value(const NetworkSpec& spec, std::size_t j, const Transition& tr) {
  const auto& q = spec.gvf(j);
  return std::visit(Overloaded{
                        [](const ConstantContinuation& c) { return c.gamma; },
                        [&](const TerminatingContinuation& c) {
                          for (std::size_t idx : c.terminal_obs) {
                            if (idx < tr.next_obs.size() && tr.next_obs[idx] > 0.5) return 0.0;
                          }
                          return c.gamma;
                        },
                    },
                    q.continuation);
}

double target_policy_prob(const NetworkSpec& spec, std::size_t j, int action) {
  const auto& q = spec.gvf(j);
  return std::visit(Overloaded{
                        [&](const PersistentPolicy& p) { return p.action == action ? 1.0 : 0.0; },
                        [](const UniformRandomPolicy& p) { return 1.0 / p.num_actions; },
                        [](const FixedStreamPolicy&) { return 1.0; },
                    },
                    q.policy);
}

GvfQuestion compass_leap_gvf(int color) {
  return GvfQuestion{PersistentPolicy{compass::kForward}, color_bit(color),
                     TerminatingContinuation{1.0, all_colors_terminal()},
                     std::string("leap-") + compass::color_name(color)};
}

NetworkSpec compass_evaluation_spec() {
  std::vector<GvfQuestion> gvfs;
  for (int c = 0; c < compass::kNumColors; ++c) gvfs.push_back(compass_leap_gvf(c));
  return NetworkSpec(std::move(gvfs), compass::kObsSize);
}

namespace {

NetworkSpec build_horizon(const PredefinedParams& p) {
  std::vector<GvfQuestion> gvfs;
  if (p.compass_horizon) {
    for (int c = 0; c < compass::kNumColors; ++c) {
      for (int k : p.exponents) {
        const double gamma = 1.0 - std::ldexp(1.0, k);
        gvfs.push_back({PersistentPolicy{compass::kForward}, color_bit(c), ConstantContinuation{gamma},
                        std::string("horizon-") + compass::color_name(c) + "-" + std::to_string(k)});
      }
    }
    return NetworkSpec(std::move(gvfs), compass::kObsSize);
  }
  if (p.count == 0) throw SpecError("horizon: count must be positive");
  if (!(p.gamma_lo >= 0.0 && p.gamma_hi <= 1.0 && p.gamma_lo <= p.gamma_hi)) {
    throw SpecError("horizon: gamma range invalid");
  }
  for (std::size_t i = 0; i < p.count; ++i) {
    const double gamma =
        p.count == 1 ? p.gamma_lo
                     : p.gamma_lo + (p.gamma_hi - p.gamma_lo) * static_cast<double>(i) /
                                        static_cast<double>(p.count - 1);
    StimulusCumulant c{p.obs_index, StimulusCriterion::kValue, 0.0, 1.0 - gamma, true};
    gvfs.push_back({FixedStreamPolicy{}, c, ConstantContinuation{gamma}, "horizon-" + std::to_string(i)});
  }
  return NetworkSpec(std::move(gvfs));
}

NetworkSpec build_terminating_horizon(const PredefinedParams& p) {
  std::vector<GvfQuestion> gvfs;
  for (int c = 0; c < compass::kNumColors; ++c) {
    for (int k : p.exponents) {
      if (k >= 0) throw SpecError("terminating-horizon: exponents must be negative");
      const double gamma = 1.0 - std::ldexp(1.0, k);
      gvfs.push_back({PersistentPolicy{compass::kForward}, color_bit(c),
                      TerminatingContinuation{gamma, all_colors_terminal()},
                      std::string("th-") + compass::color_name(c) + "-" + std::to_string(k)});
    }
  }
  return NetworkSpec(std::move(gvfs), compass::kObsSize);
}

NetworkSpec build_expert(const PredefinedParams& p) {
  std::vector<GvfQuestion> gvfs;
  const auto terminal = all_colors_terminal();
  for (int c = 0; c < compass::kNumColors; ++c) {
    const std::string name = compass::color_name(c);
    const std::size_t base = gvfs.size();
    // base+0..2: myopic forward/left/right, base+3: leap
    for (int a = 0; a < compass::kNumActions; ++a) {
      gvfs.push_back({PersistentPolicy{a}, color_bit(c), ConstantContinuation{0.0},
                      "myopic-" + std::to_string(a) + "-" + name});
    }
    gvfs.push_back(compass_leap_gvf(c));
    for (int a : {compass::kLeft, compass::kRight}) {
      gvfs.push_back({PersistentPolicy{a}, CompositionalCumulant{{{base + 3, 1.0}}}, ConstantContinuation{0.0},
                      "turn-" + std::to_string(a) + "-then-leap-" + name});
    }
    for (int a : {compass::kLeft, compass::kRight}) {
      gvfs.push_back({PersistentPolicy{compass::kForward},
                      CompositionalCumulant{{{base + static_cast<std::size_t>(a), 1.0}}},
                      TerminatingContinuation{1.0, terminal},
                      "leap-then-myopic-" + std::to_string(a) + "-" + name});
    }
    if (p.expert_random_policy) {
      gvfs.push_back({UniformRandomPolicy{compass::kNumActions}, color_bit(c),
                      TerminatingContinuation{0.5, terminal}, "random-" + name});
    }
  }
  return NetworkSpec(std::move(gvfs), compass::kObsSize);
}

NetworkSpec build_ring_chains(const PredefinedParams& p) {
  if (p.chain_depth == 0) throw SpecError("ringworld-chains: depth must be positive");
  std::vector<GvfQuestion> gvfs;
  for (int dir : {ring::kLeft, ring::kRight}) {
    const std::string name = dir == ring::kLeft ? "left" : "right";
    for (std::size_t k = 0; k < p.chain_depth; ++k) {
      Cumulant c = StimulusCumulant{ring::kSixBit, StimulusCriterion::kValue, 0.0, 1.0, false};
      if (k > 0) c = CompositionalCumulant{{{gvfs.size() - 1, 1.0}}};
      gvfs.push_back({PersistentPolicy{dir}, c, ConstantContinuation{0.0},
                      "chain-" + name + "-" + std::to_string(k + 1)});
    }
  }
  return NetworkSpec(std::move(gvfs), ring::kObsSize);
}

}  // namespace

NetworkSpec build_predefined(const std::string& name, const PredefinedParams& params) {
  if (name == "horizon") return build_horizon(params);
  if (name == "terminating-horizon") return build_terminating_horizon(params);
  if (name == "naive") return compass_evaluation_spec();
  if (name == "expert") return build_expert(params);
  if (name == "ringworld-chains") return build_ring_chains(params);
  throw SpecError("unknown network family: " + name);
}

std::string gvf_kind(const GvfQuestion& q) {
  std::string cont = std::visit(Overloaded{
                                    [](const ConstantContinuation& c) {
                                      return std::string(c.gamma == 0.0 ? "myopic" : "horizon");
                                    },
                                    [](const TerminatingContinuation&) { return std::string("terminating"); },
                                },
                                q.continuation);
  std::string cum = std::visit(Overloaded{
                                   [](const StimulusCumulant&) { return std::string("stimulus"); },
                                   [](const CompositionalCumulant&) { return std::string("compositional"); },
                                   [](const RandomCumulant&) { return std::string("random"); },
                               },
                               q.cumulant);
  std::string pol = std::visit(Overloaded{
                                   [](const PersistentPolicy&) { return std::string("persistent"); },
                                   [](const UniformRandomPolicy&) { return std::string("uniform"); },
                                   [](const FixedStreamPolicy&) { return std::string("stream"); },
                               },
                               q.policy);
  return cont + "/" + cum + "/" + pol;
}

}  // namespace gvfn
