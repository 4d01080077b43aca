#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gvfn/numerics.hpp"

namespace gvfn {

struct MetricPoint {
  std::size_t step = 0;              // samples consumed when the window closed
  std::optional<double> value;       // empty when undefined
};

struct MetricSeries {
  std::string name;
  std::size_t window = 0;
  std::vector<MetricPoint> points;

  /// Last defined value.
  std::optional<double> final_value() const;
  /// Mean of the defined values among the last `count` windows.
  std::optional<double> tail_mean(std::size_t count) const;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> v);

/// sqrt(sum (yhat - y)^2 / sum (ybar_W - y)^2) per window; a zero-variance window is undefined.
class NrmseWindow {
 public:
  explicit NrmseWindow(std::size_t window);
  void add(double prediction, double target);
  const MetricSeries& series() const { return series_; }

 private:
  MetricSeries series_;
  std::vector<double> targets_;
  double sq_err_ = 0.0;
  std::size_t seen_ = 0;
};

/// sqrt of the mean squared error over all steps and columns in each window.
class RmsveWindow {
 public:
  explicit RmsveWindow(std::size_t window);
  void add(std::span<const double> predictions, std::span<const double> truth);
  const MetricSeries& series() const { return series_; }

 private:
  MetricSeries series_;
  double sq_err_ = 0.0;
  std::size_t cells_ = 0;
  std::size_t in_window_ = 0;
  std::size_t seen_ = 0;
};

/// Fraction of steps whose argmax prediction equals the label.
class PercentCorrectWindow {
 public:
  explicit PercentCorrectWindow(std::size_t window);
  void add(std::span<const double> predictions, std::size_t label);
  const MetricSeries& series() const { return series_; }

 private:
  MetricSeries series_;
  std::size_t correct_ = 0;
  std::size_t in_window_ = 0;
  std::size_t seen_ = 0;
};

/// Batch forms over full-length records; a trailing partial window is dropped.
MetricSeries nrmse_windows(std::span<const double> preds, std::span<const double> targets, std::size_t window);
MetricSeries rmsve(const Matrix& preds, const Matrix& truth, std::size_t window);
MetricSeries percent_correct(const Matrix& preds, std::span<const std::size_t> labels, std::size_t window);

}  // namespace gvfn
