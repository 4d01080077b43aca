#include "gvfn/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace gvfn {

std::optional<double> MetricSeries::final_value() const {
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    if (it->value) return it->value;
  }
  return std::nullopt;
}

std::optional<double> MetricSeries::tail_mean(std::size_t count) const {
  double sum = 0.0;
  std::size_t n = 0;
  const std::size_t start = points.size() > count ? points.size() - count : 0;
  for (std::size_t i = start; i < points.size(); ++i) {
    if (points[i].value) {
      sum += *points[i].value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::size_t argmax_lowest(std::span<const double> v) {
  if (v.empty()) throw DimensionError("argmax_lowest: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

namespace {

void check_window(std::size_t window) {
  if (window == 0) throw std::invalid_argument("metric window must be positive");
}

}  // namespace

NrmseWindow::NrmseWindow(std::size_t window) {
  check_window(window);
  series_ = {"nrmse", window, {}};
  targets_.reserve(window);
}

void NrmseWindow::add(double prediction, double target) {
  ++seen_;
  sq_err_ += (prediction - target) * (prediction - target);
  targets_.push_back(target);
  if (targets_.size() < series_.window) return;
  double mean = 0.0;
  for (double y : targets_) mean += y;
  mean /= static_cast<double>(targets_.size());
  double var = 0.0;
  for (double y : targets_) var += (y - mean) * (y - mean);
  MetricPoint p{seen_, std::nullopt};
  if (var > 0.0) p.value = std::sqrt(sq_err_ / var);
  series_.points.push_back(p);
  targets_.clear();
  sq_err_ = 0.0;
}

RmsveWindow::RmsveWindow(std::size_t window) {
  check_window(window);
  series_ = {"rmsve", window, {}};
}

void RmsveWindow::add(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw DimensionError("rmsve: prediction/oracle width differs");
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const double e = predictions[j] - truth[j];
    sq_err_ += e * e;
  }
  cells_ += predictions.size();
  ++seen_;
  if (++in_window_ < series_.window) return;
  series_.points.push_back({seen_, cells_ > 0 ? std::optional<double>(std::sqrt(sq_err_ / cells_)) : std::nullopt});
  sq_err_ = 0.0;
  cells_ = 0;
  in_window_ = 0;
}

PercentCorrectWindow::PercentCorrectWindow(std::size_t window) {
  check_window(window);
  series_ = {"percent_correct", window, {}};
}

void PercentCorrectWindow::add(std::span<const double> predictions, std::size_t label) {
  if (label >= predictions.size()) throw std::invalid_argument("percent_correct: label out of range");
  if (argmax_lowest(predictions) == label) ++correct_;
  ++seen_;
  if (++in_window_ < series_.window) return;
  series_.points.push_back({seen_, static_cast<double>(correct_) / static_cast<double>(series_.window)});
  correct_ = 0;
  in_window_ = 0;
}

MetricSeries nrmse_windows(std::span<const double> preds, std::span<const double> targets, std::size_t window) {
  if (preds.size() != targets.size()) throw DimensionError("nrmse_windows: lengths differ");
  if (preds.size() < window) throw std::invalid_argument("nrmse_windows: fewer samples than one window");
  NrmseWindow m(window);
  for (std::size_t t = 0; t < preds.size(); ++t) m.add(preds[t], targets[t]);
  return m.series();
}

MetricSeries rmsve(const Matrix& preds, const Matrix& truth, std::size_t window) {
  if (preds.rows() != truth.rows() || preds.cols() != truth.cols()) throw DimensionError("rmsve: shapes differ");
  RmsveWindow m(window);
  for (std::size_t t = 0; t < preds.rows(); ++t) m.add(preds.row(t), truth.row(t));
  return m.series();
}

MetricSeries percent_correct(const Matrix& preds, std::span<const std::size_t> labels, std::size_t window) {
  if (preds.rows() != labels.size()) throw DimensionError("percent_correct: label count differs");
  PercentCorrectWindow m(window);
  for (std::size_t t = 0; t < preds.rows(); ++t) m.add(preds.row(t), labels[t]);
  return m.series();
}

}  // namespace gvfn
