#include <gtest/gtest.h>

#include <cmath>

#include "gvfn/eval.hpp"

namespace gvfn {
namespace {

TEST(Nrmse, PerfectIsZero) {
  const Vector y{1, 5, 2, 7, 3, 3};
  const auto s = nrmse_windows(y, y, 3);
  ASSERT_EQ(s.points.size(), 2u);
  for (const auto& p : s.points) EXPECT_EQ(*p.value, 0.0);
  EXPECT_EQ(s.points[1].step, 6u);
}

TEST(Nrmse, WindowMeanIsOne) {
  const Vector y{1, 5, 3};
  const auto s = nrmse_windows(Vector{3, 3, 3}, y, 3);
  EXPECT_DOUBLE_EQ(*s.points[0].value, 1.0);
}

TEST(Nrmse, HandExample) {
  const auto s = nrmse_windows(Vector{1, 2, 2}, Vector{1, 2, 3}, 3);
  EXPECT_NEAR(*s.points[0].value, std::sqrt(0.5), 1e-15);
}

TEST(Nrmse, ZeroVarianceIsUndefined) {
  const auto s = nrmse_windows(Vector{1, 2, 2, 0}, Vector{2, 2, 1, 2}, 2);
  EXPECT_FALSE(s.points[0].value.has_value());
  EXPECT_TRUE(s.points[1].value.has_value());
  EXPECT_EQ(s.final_value(), s.points[1].value);
}

TEST(Nrmse, ShiftInvariant) {
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector p(40), y(40);
    for (double& v : p) v = g(rng);
    for (double& v : y) v = g(rng);
    const double c = 10.0 * g(rng);
    Vector ps = p, ys = y;
    for (double& v : ps) v += c;
    for (double& v : ys) v += c;
    const auto a = nrmse_windows(p, y, 10), b = nrmse_windows(ps, ys, 10);
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_NEAR(*a.points[i].value, *b.points[i].value, 1e-9);
  }
}

TEST(Nrmse, RejectsShortInput) { EXPECT_THROW(nrmse_windows(Vector{1}, Vector{1}, 2), std::invalid_argument); }

TEST(Rmsve, Examples) {
  Matrix truth(4, 5), zero(4, 5);
  for (std::size_t t = 0; t < 4; ++t) truth(t, t % 5) = 1.0;
  EXPECT_EQ(*rmsve(truth, truth, 2).points[0].value, 0.0);
  const auto s = rmsve(zero, truth, 2);
  EXPECT_NEAR(*s.points[0].value, std::sqrt(0.2), 1e-15);
  EXPECT_NEAR(*rmsve(zero, truth, 4).points[0].value, *s.points[1].value, 1e-15);
  EXPECT_THROW(rmsve(Matrix(4, 4), truth, 2), DimensionError);
}

TEST(PercentCorrect, Examples) {
  Matrix p(10000, 5);
  std::vector<std::size_t> labels(10000);
  for (std::size_t t = 0; t < 10000; ++t) {
    labels[t] = t % 5;
    p(t, t < 9000 ? labels[t] : (labels[t] + 1) % 5) = 1.0;
  }
  EXPECT_DOUBLE_EQ(*percent_correct(p, labels, 10000).points[0].value, 0.9);
  Matrix flat(100, 5, 0.25);
  std::vector<std::size_t> l(100, 3);
  for (std::size_t t = 0; t < 30; ++t) l[t] = 0;
  EXPECT_DOUBLE_EQ(*percent_correct(flat, l, 100).points[0].value, 0.3);
}

TEST(PercentCorrect, MonotoneTransformInvariant) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p(200, 5);
  std::vector<std::size_t> labels(200);
  for (std::size_t t = 0; t < 200; ++t) {
    for (std::size_t j = 0; j < 5; ++j) p(t, j) = std::round(u(rng) * 4) / 4;  // frequent ties
    labels[t] = static_cast<std::size_t>(u(rng) * 5);
  }
  Matrix q = p;
  for (double& v : q.data()) v = std::exp(3 * v) - 7;
  const auto a = percent_correct(p, labels, 50), b = percent_correct(q, labels, 50);
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(*a.points[i].value, *b.points[i].value);
}

TEST(MetricSeries, TailMeanAndArgmax) {
  MetricSeries s{"x", 1, {{1, 1.0}, {2, std::nullopt}, {3, 3.0}}};
  EXPECT_DOUBLE_EQ(*s.tail_mean(2), 3.0);
  EXPECT_DOUBLE_EQ(*s.tail_mean(10), 2.0);
  EXPECT_EQ(argmax_lowest(Vector{0.1, 0.5, 0.5}), 1u);
}

}  // namespace
}  // namespace gvfn
