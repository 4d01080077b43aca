#include "gvfn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "gvfn/compass_world.hpp"
#include "gvfn/discovery.hpp"
#include "gvfn/forecast.hpp"
#include "gvfn/ring_world.hpp"
#include "gvfn/tabular.hpp"
#include "gvfn/td_head.hpp"

namespace gvfn {

void append_series(std::vector<MetricRow>& rows, const std::string& run_id, std::uint64_t seed,
                   const std::string& metric, const MetricSeries& series) {
  for (const auto& p : series.points) rows.push_back({run_id, seed, p.step, metric, p.value});
}

namespace {

constexpr std::size_t kProgressEvery = 100000;

LearnerOptions learner_options(const LearnerConfig& l) {
  LearnerOptions o;
  o.algorithm = l.kind == LearnerKind::kRgtd ? TdAlgorithm::kRgtd : TdAlgorithm::kRtd;
  o.truncation = l.truncation;
  o.alpha = l.alpha;
  o.beta = l.beta;
  o.optimizer = l.optimizer;
  o.batch = l.batch;
  o.clip_norm = l.clip_norm;
  return o;
}

Vector with_bias(std::span<const double> obs) {
  Vector x(obs.begin(), obs.end());
  x.push_back(1.0);
  return x;
}

void tick(const ProgressFn& progress, std::size_t t) {
  if (progress && t % kProgressEvery == 0) progress(t);
}

void finish(RunResult& r, const std::string& metric, const MetricSeries& series) {
  r.primary_metric = metric;
  r.final_value = series.final_value();
}

// ---- compass world -------------------------------------------------------

void run_compass(const ExperimentConfig& cfg, Rng& rng, RunResult& r, const ProgressFn& progress) {
  CompassWorld env = CompassWorld::random_start(cfg.compass.width, cfg.compass.height, rng, cfg.compass.behavior);
  const bool forecast = cfg.learner.kind == LearnerKind::kForecast;
  std::optional<GvfnLearner> gvfn;
  std::optional<ForecastLearner> fc;
  std::size_t n = 0;
  if (forecast) {
    ForecastOptions fo;
    fo.truncation = cfg.learner.truncation;
    fo.horizons = cfg.network.horizons;
    fo.target_bits = compass_color_bits();
    fo.alpha = cfg.learner.alpha;
    fo.optimizer = cfg.learner.optimizer;
    fo.batch = cfg.learner.batch;
    fo.clip_norm = cfg.learner.clip_norm;
    n = fo.horizons.size() * fo.target_bits.size();
    GvfnParams p(n, compass::kObsSize + 1, compass::kNumActions, cfg.network.activation);
    p.randomize(rng);
    fc.emplace(std::move(p), fo);
  } else {
    NetworkSpec spec = build_predefined(cfg.network.family, cfg.network.params);
    n = spec.size();
    GvfnParams p(n, compass::kObsSize + 1, compass::kNumActions, cfg.network.activation);
    p.randomize(rng);
    gvfn.emplace(std::move(spec), std::move(p), learner_options(cfg.learner));
  }
  auto state = [&]() -> const Vector& { return forecast ? fc->state() : gvfn->state(); };
  TdHead head(compass_evaluation_spec(), n, {cfg.head.hidden, cfg.head.alpha, cfg.head.optimizer}, rng);

  RmsveWindow err(cfg.window);
  PercentCorrectWindow correct(cfg.window);
  Vector truth(compass::kNumColors, 0.0);
  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const Transition tr = env.step(rng);
    const Vector input = with_bias(tr.next_obs);
    const Vector s_t = state();
    if (forecast) {
      fc->step(input, tr.action, tr.next_obs);
    } else {
      gvfn->step(tr, input, rng);
    }
    head.update(tr, s_t, state(), rng);
    const Vector pred = head.predict(state());
    const int label = leap_color(env.state());
    std::fill(truth.begin(), truth.end(), 0.0);
    truth[static_cast<std::size_t>(label)] = 1.0;
    err.add(pred, truth);
    correct.add(pred, static_cast<std::size_t>(label));
    tick(progress, t);
  }
  append_series(r.rows, r.run_id, r.seed, "rmsve", err.series());
  append_series(r.rows, r.run_id, r.seed, "percent_correct", correct.series());
  finish(r, "rmsve", err.series());
  if (auto v = correct.series().final_value()) r.summary["percent_correct"] = *v;
}

// ---- ring world ----------------------------------------------------------

void run_ring(const ExperimentConfig& cfg, Rng& rng, RunResult& r, const ProgressFn& progress) {
  const NetworkSpec spec = build_predefined("ringworld-chains", cfg.network.params);
  const std::size_t depth = cfg.network.params.chain_depth;
  GvfnParams p(spec.size(), ring::kObsSize + 1, ring::kNumActions, cfg.network.activation);
  p.randomize(rng);
  GvfnLearner learner(spec, std::move(p), learner_options(cfg.learner));
  RingWorld env(RingState{std::uniform_int_distribution<int>(1, ring::kNumStates)(rng)});

  RmsveWindow err(cfg.window);
  RmsveWindow next_bit(cfg.window);
  Vector truth(spec.size());
  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const Transition tr = env.step(rng);
    learner.step(tr, with_bias(tr.next_obs), rng);
    for (std::size_t j = 0; j < spec.size(); ++j) {
      const int dir = j < depth ? ring::kLeft : ring::kRight;
      truth[j] = ring_oracle(env.state(), j % depth + 1, dir);
    }
    err.add(learner.state(), truth);
    // depth-1 questions in both directions: the next observation bit
    const Vector s = learner.state();
    next_bit.add(Vector{s[0], s[depth]}, Vector{truth[0], truth[depth]});
    tick(progress, t);
  }
  append_series(r.rows, r.run_id, r.seed, "rmse", err.series());
  append_series(r.rows, r.run_id, r.seed, "next_bit_rmse", next_bit.series());
  finish(r, "rmse", err.series());
}

// ---- time series ---------------------------------------------------------

/// Supervised relu head on a state it cannot change, fit to targets that arrive `delay` steps late.
class DelayedHead {
 public:
  DelayedHead(std::size_t inputs, const HeadConfig& cfg, Rng& rng)
      : head_(inputs, std::max<std::size_t>(cfg.hidden, 1), 1), cfg_(cfg), adam_(head_.theta.size()),
        grad_(head_.theta.size()) {
    head_.randomize(rng);
  }

  double predict(std::span<const double> s) const { return head_forward(head_, s)[0]; }

  void fit(std::span<const double> s, double target) {
    const HeadForward fwd = head_forward_full(head_, s);
    std::fill(grad_.begin(), grad_.end(), 0.0);
    const Vector g{fwd.output[0] - target};
    head_backward(head_, s, fwd, g, grad_, {});
    if (cfg_.optimizer == OptimizerKind::kAdam) {
      adam_step(adam_, head_.theta, grad_, cfg_.alpha);
    } else {
      axpy(-cfg_.alpha, grad_, head_.theta);
    }
    require_finite(head_.theta, "prediction head");
  }

 private:
  HeadParams head_;
  HeadConfig cfg_;
  AdamState adam_;
  Vector grad_;
};

void run_timeseries(const ExperimentConfig& cfg, Rng& rng, RunResult& r, const ProgressFn& progress) {
  const Vector y = generate_series(cfg.series);
  const std::size_t h = cfg.series.horizon;
  const std::size_t m = std::min(y.size(), cfg.steps + 1);
  const LearnerKind kind = cfg.learner.kind;
  const bool gvfn = kind == LearnerKind::kRtd || kind == LearnerKind::kRgtd;

  PredefinedParams hp = cfg.network.params;
  hp.compass_horizon = false;
  hp.obs_index = 0;
  const NetworkSpec spec = build_predefined("horizon", hp);

  std::optional<GvfnLearner> learner;
  std::optional<DelayedHead> head;
  std::optional<RnnLearner> rnn;
  if (gvfn) {
    GvfnParams p(spec.size(), 2, 1, cfg.network.activation);
    p.randomize(rng);
    learner.emplace(spec, std::move(p), learner_options(cfg.learner));
    head.emplace(spec.size(), cfg.head, rng);
  } else {
    RnnOptions o;
    o.cell = kind == LearnerKind::kSupervisedRnn ? CellKind::kSimple
             : kind == LearnerKind::kSupervisedGru ? CellKind::kGru
                                                   : cfg.learner.cell;
    o.hidden = cfg.learner.hidden;
    o.truncation = cfg.learner.truncation;
    o.alpha = cfg.learner.alpha;
    o.optimizer = cfg.learner.optimizer;
    o.batch = cfg.learner.batch;
    o.clip_norm = cfg.learner.clip_norm;
    o.head_hidden = std::max<std::size_t>(cfg.head.hidden, 1);
    o.delay = h;
    rnn.emplace(2, 1, o, rng, NetworkSpec{}, kind == LearnerKind::kAuxRnn ? spec : NetworkSpec{});
  }

  NrmseWindow err(cfg.window);
  std::deque<Vector> states;
  std::deque<double> preds;
  double scale = std::max(std::abs(y[0]), 1e-12);
  for (std::size_t t = 1; t < m; ++t) {
    scale = std::max(scale, std::abs(y[t]));
    const Transition tr{{y[t - 1]}, 0, {y[t]}, 1.0, scale};
    const Vector input{y[t] / scale, 1.0};
    if (gvfn) {
      learner->step(tr, input, rng);
      states.push_back(learner->state());
      preds.push_back(head->predict(learner->state()));
      if (preds.size() > h) {
        err.add(preds.front(), y[t]);
        head->fit(states.front(), y[t]);
        states.pop_front();
        preds.pop_front();
      }
    } else {
      preds.push_back(rnn->advance(input)[0]);
      if (kind == LearnerKind::kAuxRnn) rnn->add_td(tr, rng);
      if (preds.size() > h) {
        err.add(preds.front(), y[t]);
        preds.pop_front();
      }
      rnn->add_supervised(Vector{y[t]});
      rnn->end_step();
    }
    tick(progress, t);
  }
  append_series(r.rows, r.run_id, r.seed, "nrmse", err.series());
  finish(r, "nrmse", err.series());
}

// ---- discovery -----------------------------------------------------------

void run_discovery(const ExperimentConfig& cfg, Rng& rng, RunResult& r, const ProgressFn& progress) {
  CompassWorld env = CompassWorld::random_start(cfg.compass.width, cfg.compass.height, rng, cfg.compass.behavior);
  NetworkSpec pool = discovery_seed_pool(cfg.discovery.noise, cfg.discovery.noise_variance);
  GvfnParams p(pool.size(), compass::kObsSize + 1, compass::kNumActions, cfg.network.activation);
  p.randomize(rng);
  GvfnLearner learner(pool, std::move(p), learner_options(cfg.learner));
  TdHead head(compass_evaluation_spec(), pool.size(), {cfg.head.hidden, cfg.head.alpha, cfg.head.optimizer}, rng);
  DiscoveryConfig dc;
  dc.prune_interval = cfg.discovery.interval;
  dc.prune_fraction = cfg.discovery.fraction;
  dc.regenerate = cfg.discovery.regenerate;

  DiscoveryHistory hist;
  // Chunked so progress can be reported; pruning is keyed to the global step.
  const std::size_t chunk = dc.prune_interval;
  std::size_t done = 0;
  while (done < cfg.steps) {
    const std::size_t len = std::min(chunk, cfg.steps - done);
    DiscoveryConfig part = dc;
    if (len < chunk) part.prune_interval = cfg.steps + 1;
    DiscoveryHistory h = discovery_loop(env, learner, head, part, len, cfg.window, rng);
    for (auto& e : h.events) {
      e.step += done;
      hist.events.push_back(std::move(e));
    }
    for (auto& [s, v] : h.rmsve) hist.rmsve.emplace_back(s + done, v);
    done += len;
    if (progress) progress(done);
  }

  MetricSeries err{"rmsve", cfg.window, {}};
  for (const auto& [s, v] : hist.rmsve) err.points.push_back({s, v});
  append_series(r.rows, r.run_id, r.seed, "rmsve", err);
  std::size_t pruned3 = 0, noise3 = 0;
  for (std::size_t i = 0; i < hist.events.size(); ++i) {
    const PoolEvent& e = hist.events[i];
    auto row = [&](const std::string& metric, double v) { r.rows.push_back({r.run_id, r.seed, e.step, metric, v}); };
    row("pool_size", static_cast<double>(e.pool_after));
    row("pruned", static_cast<double>(e.pruned_labels.size()));
    row("pruned_noise", static_cast<double>(e.pruned_noise));
    row("generated", static_cast<double>(e.generated));
    for (const auto& [kind, count] : e.kind_histogram) row("kind:" + kind, static_cast<double>(count));
    if (i < 3) {
      pruned3 += e.pruned_labels.size();
      noise3 += e.pruned_noise;
    }
  }
  finish(r, "rmsve", err);
  r.summary["pruned_first3"] = static_cast<double>(pruned3);
  r.summary["pruned_noise_first3"] = static_cast<double>(noise3);
}

// ---- tabular -------------------------------------------------------------

void run_tabular(const ExperimentConfig& cfg, std::uint64_t seed, RunResult& r) {
  const TabularCheckReport rep = run_tabular_check(seed, cfg.tabular_models);
  auto row = [&](const std::string& metric, double v) {
    r.rows.push_back({r.run_id, r.seed, 0, metric, v});
    r.summary[metric] = v;
  };
  row("models", static_cast<double>(rep.models));
  row("converged", static_cast<double>(rep.converged));
  row("diverged", static_cast<double>(rep.diverged));
  row("max_error", rep.max_error);
  row("counterexample_diverged", rep.counterexample_diverged ? 1.0 : 0.0);
  row("counterexample_ratio", rep.counterexample_ratio);
  row("counterexample_iterations", static_cast<double>(rep.counterexample_iterations));
  r.primary_metric = "max_error";
  r.final_value = rep.max_error;
}

}  // namespace

namespace {

/// Flushes subnormals to zero on this thread for its lifetime. Saturated sigmoid derivatives
/// otherwise push long runs onto the slow subnormal path.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

}  // namespace

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress) {
  const FlushSubnormals ftz;
  RunResult r;
  r.run_id = cfg.run_id;
  r.seed = seed;
  Rng rng(seed);
  try {
    switch (cfg.kind) {
      case ExperimentKind::kCompassWorld: run_compass(cfg, rng, r, progress); break;
      case ExperimentKind::kRingWorld: run_ring(cfg, rng, r, progress); break;
      case ExperimentKind::kTimeseriesMg:
      case ExperimentKind::kTimeseriesMso: run_timeseries(cfg, rng, r, progress); break;
      case ExperimentKind::kDiscovery: run_discovery(cfg, rng, r, progress); break;
      case ExperimentKind::kTabularCheck: run_tabular(cfg, seed, r); break;
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
    r.rows.clear();
    r.final_value.reset();
  }
  return r;
}

}  // namespace gvfn
