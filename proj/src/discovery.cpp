#include "gvfn/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gvfn/eval.hpp"

namespace gvfn {

GeneratorConfig compass_generator_config() {
  GeneratorConfig g;
  for (int c = 0; c < compass::kNumColors; ++c) {
    g.stimulus_indices.push_back(compass::seen_bit(c));
    g.terminal_obs.push_back(compass::seen_bit(c));
  }
  g.num_actions = compass::kNumActions;
  return g;
}

namespace {

std::size_t draw(Rng& rng, std::initializer_list<double> weights) {
  std::discrete_distribution<std::size_t> d(weights);
  return d(rng);
}

double draw_horizon_gamma(Rng& rng) {
  const int k = std::uniform_int_distribution<int>(-7, -1)(rng);
  return 1.0 - std::ldexp(1.0, k);
}

}  // namespace

GvfQuestion generate_gvf(Rng& rng, const GeneratorConfig& cfg, const NetworkSpec& pool) {
  if (cfg.stimulus_indices.empty()) throw std::invalid_argument("generate_gvf: no stimulus indices");
  if (cfg.num_actions < 1) throw std::invalid_argument("generate_gvf: no actions");
  const auto& w = cfg.weights;
  GvfQuestion q;
  std::string label = "gen";

  switch (draw(rng, {w.myopic, w.horizon, w.termination})) {
    case 0:
      q.continuation = ConstantContinuation{0.0};
      break;
    case 1:
      q.continuation = ConstantContinuation{draw_horizon_gamma(rng)};
      break;
    default: {
      // gamma in (0, 1]: a horizon value or exactly 1.
      const double g = std::uniform_int_distribution<int>(0, 7)(rng) == 0 ? 1.0 : draw_horizon_gamma(rng);
      q.continuation = TerminatingContinuation{g, cfg.terminal_obs};
    }
  }

  std::size_t ck = draw(rng, {w.stimulus, w.compositional, w.random_cumulant});
  if (ck == 1 && pool.size() == 0) ck = 0;
  if (ck == 0) {
    const std::size_t idx = cfg.stimulus_indices[std::uniform_int_distribution<std::size_t>(
        0, cfg.stimulus_indices.size() - 1)(rng)];
    const bool on_zero = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    q.cumulant = on_zero ? StimulusCumulant{idx, StimulusCriterion::kEquals, 0.0, 1.0, false}
                         : StimulusCumulant{idx, StimulusCriterion::kAbove, 0.5, 1.0, false};
  } else if (ck == 1) {
    const std::size_t ref = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
    q.cumulant = CompositionalCumulant{{{ref, 1.0}}};
  } else {
    std::uniform_real_distribution<double> u(0.0, cfg.max_variance);
    double v = u(rng);
    if (v == 0.0) v = cfg.max_variance;
    q.cumulant = RandomCumulant{v};
  }

  if (draw(rng, {w.random_policy, w.persistent_policy}) == 0) {
    q.policy = UniformRandomPolicy{cfg.num_actions};
  } else {
    q.policy = PersistentPolicy{std::uniform_int_distribution<int>(0, cfg.num_actions - 1)(rng)};
  }
  q.label = "gen-" + gvf_kind(q);
  return q;
}

std::vector<std::size_t> evaluate_and_prune(const Matrix& task_weights, double eps, const std::vector<bool>& is_gvf) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("evaluate_and_prune: eps outside [0, 1]");
  const std::size_t m = task_weights.cols();
  if (!is_gvf.empty() && is_gvf.size() != m) throw DimensionError("evaluate_and_prune: mask size");
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < m; ++j) {
    if (is_gvf.empty() || is_gvf[j]) candidates.push_back(j);
  }
  const auto n = candidates.size();
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * eps + 1e-12));
  Vector bar(m, 0.0);
  for (std::size_t k = 0; k < task_weights.rows(); ++k)
    for (std::size_t j = 0; j < m; ++j) bar[j] += std::abs(task_weights(k, j));
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return bar[a] < bar[b]; });
  candidates.resize(count);
  return candidates;
}

std::vector<std::size_t> close_under_dependents(const NetworkSpec& spec, const std::vector<std::size_t>& indices) {
  std::set<std::size_t> out(indices.begin(), indices.end());
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& e : spec.edges()) {
      if (out.count(e.to) && !out.count(e.from)) {
        out.insert(e.from);
        grew = true;
      }
    }
  }
  return {out.begin(), out.end()};
}

NetworkSpec remove_gvfs(const NetworkSpec& spec, const std::vector<std::size_t>& indices) {
  const std::set<std::size_t> drop(indices.begin(), indices.end());
  std::vector<std::size_t> remap(spec.size(), spec.size());
  std::size_t next = 0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (!drop.count(j)) remap[j] = next++;
  }
  std::vector<GvfQuestion> kept;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (drop.count(j)) continue;
    GvfQuestion q = spec.gvf(j);
    if (auto* comp = std::get_if<CompositionalCumulant>(&q.cumulant)) {
      for (auto& t : comp->terms) {
        if (drop.count(t.gvf)) throw SpecError("remove_gvfs: kept GVF " + std::to_string(j) + " references a removed one");
        t.gvf = remap[t.gvf];
      }
    }
    kept.push_back(std::move(q));
  }
  return NetworkSpec(std::move(kept));
}

NetworkSpec append_gvfs(const NetworkSpec& spec, const std::vector<GvfQuestion>& extra) {
  std::vector<GvfQuestion> all = spec.gvfs();
  all.insert(all.end(), extra.begin(), extra.end());
  return NetworkSpec(std::move(all));
}

NetworkSpec discovery_seed_pool(std::size_t noise, double noise_variance) {
  std::vector<GvfQuestion> gvfs;
  for (int c = 0; c < compass::kNumColors; ++c) {
    const std::string name = compass::color_name(c);
    const std::size_t leap = gvfs.size() + 1;
    gvfs.push_back({PersistentPolicy{compass::kForward},
                    StimulusCumulant{compass::seen_bit(c), StimulusCriterion::kAbove, 0.5, 1.0, false},
                    ConstantContinuation{0.0}, "myopic-0-" + name});
    gvfs.push_back(compass_leap_gvf(c));
    for (int a : {compass::kLeft, compass::kRight}) {
      gvfs.push_back({PersistentPolicy{a}, CompositionalCumulant{{{leap, 1.0}}}, ConstantContinuation{0.0},
                      "turn-" + std::to_string(a) + "-then-leap-" + name});
    }
  }
  for (std::size_t i = 0; i < noise; ++i) {
    gvfs.push_back({UniformRandomPolicy{compass::kNumActions}, RandomCumulant{noise_variance},
                    ConstantContinuation{0.0}, "noise-" + std::to_string(i)});
  }
  return NetworkSpec(std::move(gvfs), compass::kObsSize);
}

namespace {

std::map<std::string, std::size_t> histogram(const NetworkSpec& spec) {
  std::map<std::string, std::size_t> h;
  for (const auto& q : spec.gvfs()) ++h[gvf_kind(q)];
  return h;
}

Vector with_bias(std::span<const double> obs) {
  Vector x(obs.begin(), obs.end());
  x.push_back(1.0);
  return x;
}

}  // namespace

DiscoveryHistory discovery_loop(CompassWorld& env, GvfnLearner& learner, TdHead& head, const DiscoveryConfig& cfg,
                                std::size_t total_steps, std::size_t metric_window, Rng& rng) {
  if (cfg.prune_interval == 0) throw std::invalid_argument("discovery_loop: prune interval must be positive");
  if (head.inputs() != learner.spec().size()) throw DimensionError("discovery_loop: head and pool sizes differ");
  DiscoveryHistory hist;
  RmsveWindow metric(metric_window);
  std::size_t reported = 0;
  Vector truth(compass::kNumColors, 0.0);
  for (std::size_t t = 1; t <= total_steps; ++t) {
    const Transition tr = env.step(rng);
    const Vector x_t = learner.state();
    learner.step(tr, with_bias(tr.next_obs), rng);
    head.update(tr, x_t, learner.state(), rng);
    std::fill(truth.begin(), truth.end(), 0.0);
    truth[static_cast<std::size_t>(leap_color(env.state()))] = 1.0;
    metric.add(head.predict(learner.state()), truth);
    for (; reported < metric.series().points.size(); ++reported) {
      const auto& p = metric.series().points[reported];
      if (p.value) hist.rmsve.emplace_back(t, *p.value);
    }
    if (t % cfg.prune_interval != 0) continue;

    PoolEvent ev;
    ev.step = t;
    ev.pool_before = learner.spec().size();
    ev.rmsve = metric.series().final_value();
    const NetworkSpec& spec = learner.spec();
    const auto chosen = evaluate_and_prune(head.task_weights(), cfg.prune_fraction);
    const auto removed = close_under_dependents(spec, chosen);
    std::vector<std::size_t> order = chosen;
    for (std::size_t j : removed) {
      if (std::find(order.begin(), order.end(), j) == order.end()) order.push_back(j);
    }
    for (std::size_t j : order) {
      ev.pruned_labels.push_back(spec.gvf(j).label);
      ev.pruned_kinds.push_back(gvf_kind(spec.gvf(j)));
      if (std::holds_alternative<RandomCumulant>(spec.gvf(j).cumulant)) ++ev.pruned_noise;
    }
    if (!removed.empty()) {
      NetworkSpec smaller = remove_gvfs(spec, removed);
      learner.remove_units(removed, smaller);
      head.remove_inputs(removed);
    }
    if (cfg.regenerate && !removed.empty()) {
      std::vector<GvfQuestion> extra;
      NetworkSpec grown = learner.spec();
      for (std::size_t k = 0; k < removed.size(); ++k) {
        extra.push_back(generate_gvf(rng, cfg.generator, grown));
        grown = append_gvfs(learner.spec(), extra);
      }
      learner.add_units(extra.size(), grown, rng);
      head.add_inputs(extra.size());
      ev.generated = extra.size();
    }
    ev.pool_after = learner.spec().size();
    ev.kind_histogram = histogram(learner.spec());
    hist.events.push_back(std::move(ev));
  }
  return hist;
}

}  // namespace gvfn
