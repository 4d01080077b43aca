#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gvfn/discovery.hpp"
#include "gvfn/td_head.hpp"

namespace gvfn {
namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, v.size());
  std::size_t j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

TEST(EvaluateAndPrune, ThirdOfThreeDropsSmallest) {
  EXPECT_EQ(evaluate_and_prune(row({0.5, 0.0, 0.3}), 1.0 / 3.0), (std::vector<std::size_t>{1}));
}

TEST(EvaluateAndPrune, ZeroAndOne) {
  EXPECT_TRUE(evaluate_and_prune(row({0.5, 0.0, 0.3}), 0.0).empty());
  EXPECT_EQ(evaluate_and_prune(row({0.5, 0.0, 0.3}), 1.0), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(EvaluateAndPrune, SumsAbsoluteOverTasks) {
  Matrix w(2, 3);
  w(0, 0) = 1.0;  w(1, 0) = -1.0;   // 2
  w(0, 1) = -0.5; w(1, 1) = 0.4;    // 0.9
  w(0, 2) = 0.2;  w(1, 2) = 0.75;   // 0.95
  EXPECT_EQ(evaluate_and_prune(w, 0.7), (std::vector<std::size_t>{1, 2}));
}

TEST(EvaluateAndPrune, TiesGoToLowerIndex) {
  EXPECT_EQ(evaluate_and_prune(row({0.2, 0.1, 0.1, 0.1}), 0.5), (std::vector<std::size_t>{1, 2}));
}

TEST(EvaluateAndPrune, MaskSkipsNonGvfColumns) {
  // Only two GVF columns: floor(2 * 0.5) = 1.
  const auto out = evaluate_and_prune(row({0.0, 0.5, 0.0, 0.3}), 0.5, {false, true, false, true});
  EXPECT_EQ(out, (std::vector<std::size_t>{3}));
}

TEST(EvaluateAndPrune, RejectsBadFraction) {
  EXPECT_THROW(evaluate_and_prune(row({1.0}), 1.5), std::invalid_argument);
  EXPECT_THROW(evaluate_and_prune(row({1.0}), -0.1), std::invalid_argument);
}

TEST(EvaluateAndPrune, PropertyCountAndOrder) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t tasks = 1 + rng() % 4, n = 1 + rng() % 30;
    Matrix w(tasks, n);
    for (double& v : w.data()) v = u(rng);
    const double eps = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto out = evaluate_and_prune(w, eps);
    ASSERT_EQ(out.size(), static_cast<std::size_t>(std::floor(n * eps + 1e-12)));
    Vector bar(n, 0.0);
    for (std::size_t k = 0; k < tasks; ++k)
      for (std::size_t j = 0; j < n; ++j) bar[j] += std::abs(w(k, j));
    const std::set<std::size_t> chosen(out.begin(), out.end());
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LE(bar[out[i - 1]], bar[out[i]]);
    for (std::size_t j = 0; j < n; ++j) {
      if (chosen.count(j)) continue;
      for (std::size_t c : out) EXPECT_LE(bar[c], bar[j]);
    }
  }
}

TEST(Generator, MyopicOnlyHasZeroGamma) {
  GeneratorConfig cfg = compass_generator_config();
  cfg.weights.horizon = 0.0;
  cfg.weights.termination = 0.0;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const GvfQuestion q = generate_gvf(rng, cfg, {});
    const auto* c = std::get_if<ConstantContinuation>(&q.continuation);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->gamma, 0.0);
  }
}

TEST(Generator, EmptyPoolFallsBackToStimulus) {
  GeneratorConfig cfg = compass_generator_config();
  cfg.weights.stimulus = 0.0;
  cfg.weights.random_cumulant = 0.0;
  Rng rng(4);
  const GvfQuestion q = generate_gvf(rng, cfg, {});
  EXPECT_TRUE(std::holds_alternative<StimulusCumulant>(q.cumulant));
}

TEST(Generator, PropertyGrownPoolsStayValidAndAcyclic) {
  const GeneratorConfig cfg = compass_generator_config();
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkSpec pool;
    for (int i = 0; i < 40; ++i) {
      const GvfQuestion q = generate_gvf(rng, cfg, pool);
      ASSERT_NO_THROW(pool = append_gvfs(pool, {q}));
    }
    EXPECT_NO_THROW(topological_order(pool));
    EXPECT_NO_THROW(NetworkSpec(pool.gvfs(), compass::kObsSize));
    for (const auto& e : pool.edges()) EXPECT_LT(e.to, e.from);
  }
}

TEST(Generator, HorizonGammasComeFromGrid) {
  GeneratorConfig cfg = compass_generator_config();
  cfg.weights.myopic = 0.0;
  cfg.weights.termination = 0.0;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const double g = std::get<ConstantContinuation>(generate_gvf(rng, cfg, {}).continuation).gamma;
    const double k = std::log2(1.0 - g);
    EXPECT_NEAR(k, std::round(k), 1e-12);
    EXPECT_GE(k, -7.0);
    EXPECT_LE(k, -1.0);
  }
}

TEST(PoolEdit, RemoveRenumbersComposition) {
  const NetworkSpec seed = discovery_seed_pool(2, 1.0);
  ASSERT_EQ(seed.size(), 22u);
  // Drop the first color's myopic question; turn-then-leap terms shift down by one.
  const NetworkSpec smaller = remove_gvfs(seed, {0});
  ASSERT_EQ(smaller.size(), 21u);
  const auto& comp = std::get<CompositionalCumulant>(smaller.gvf(1).cumulant);
  EXPECT_EQ(comp.terms[0].gvf, 0u);
  EXPECT_EQ(smaller.gvf(0).label, seed.gvf(1).label);
}

TEST(PoolEdit, RemovingAReferencedGvfThrows) {
  EXPECT_THROW(remove_gvfs(discovery_seed_pool(0, 1.0), {1}), SpecError);
}

TEST(PoolEdit, ClosureAddsDependents) {
  const NetworkSpec seed = discovery_seed_pool(0, 1.0);
  EXPECT_EQ(close_under_dependents(seed, {1}), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(close_under_dependents(seed, {0}), (std::vector<std::size_t>{0}));
  EXPECT_NO_THROW(remove_gvfs(seed, close_under_dependents(seed, {1, 5})));
}

struct LoopFixture {
  NetworkSpec pool = discovery_seed_pool(10, 1.0);
  Rng rng{21};
  CompassWorld env = CompassWorld::random_start(6, 6, rng);
  GvfnLearner learner{pool, GvfnParams(pool.size(), compass::kObsSize + 1, compass::kNumActions, {}),
                      LearnerOptions{}};
  TdHead head{compass_evaluation_spec(), pool.size(), TdHeadOptions{0, 0.05, OptimizerKind::kConstant}, rng};
};

TEST(DiscoveryLoop, ZeroFractionKeepsPool) {
  LoopFixture f;
  f.learner.params().randomize(f.rng);
  DiscoveryConfig cfg;
  cfg.prune_interval = 50;
  cfg.prune_fraction = 0.0;
  const auto hist = discovery_loop(f.env, f.learner, f.head, cfg, 200, 50, f.rng);
  ASSERT_EQ(hist.events.size(), 4u);
  for (const auto& e : hist.events) {
    EXPECT_EQ(e.pool_before, 30u);
    EXPECT_EQ(e.pool_after, 30u);
    EXPECT_TRUE(e.pruned_labels.empty());
  }
  EXPECT_EQ(hist.rmsve.size(), 4u);
}

TEST(DiscoveryLoop, WithoutRegenerationPoolShrinks) {
  LoopFixture f;
  DiscoveryConfig cfg;
  cfg.prune_interval = 40;
  cfg.prune_fraction = 0.1;
  cfg.regenerate = false;
  const auto hist = discovery_loop(f.env, f.learner, f.head, cfg, 120, 40, f.rng);
  ASSERT_EQ(hist.events.size(), 3u);
  std::size_t expected = 30;
  for (const auto& e : hist.events) {
    EXPECT_EQ(e.pool_before, expected);
    // floor(n eps) chosen; dependents may add to it.
    EXPECT_GE(e.pruned_labels.size(), expected / 10);
    expected -= e.pruned_labels.size();
    EXPECT_EQ(e.pool_after, expected);
    EXPECT_EQ(e.generated, 0u);
  }
  EXPECT_EQ(f.learner.spec().size(), expected);
  EXPECT_EQ(f.head.inputs(), expected);
  EXPECT_EQ(f.learner.state().size(), expected);
}

TEST(DiscoveryLoop, RegenerationRefillsPool) {
  LoopFixture f;
  DiscoveryConfig cfg;
  cfg.prune_interval = 30;
  cfg.prune_fraction = 0.2;
  const auto hist = discovery_loop(f.env, f.learner, f.head, cfg, 150, 30, f.rng);
  for (const auto& e : hist.events) {
    EXPECT_EQ(e.pool_after, e.pool_before - e.pruned_labels.size() + e.generated);
    EXPECT_EQ(e.generated, e.pruned_labels.size());
    std::size_t total = 0;
    for (const auto& [kind, n] : e.kind_histogram) total += n;
    EXPECT_EQ(total, e.pool_after);
  }
  EXPECT_EQ(f.learner.spec().size(), 30u);
  EXPECT_NO_THROW(topological_order(f.learner.spec()));
}

}  // namespace
}  // namespace gvfn
