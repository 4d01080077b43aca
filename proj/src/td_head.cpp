#include "gvfn/td_head.hpp"

#include <set>
#include <stdexcept>

namespace gvfn {

TdHead::TdHead(NetworkSpec spec, std::size_t inputs, TdHeadOptions opts, Rng& rng)
    : spec_(std::move(spec)), inputs_(inputs), opts_(opts) {
  if (spec_.size() == 0) throw std::invalid_argument("TdHead: no GVFs to predict");
  if (opts_.hidden > 0) {
    relu_ = HeadParams(inputs_, opts_.hidden, spec_.size());
    relu_.randomize(rng);
    adam_ = AdamState(relu_.theta.size());
  } else {
    linear_ = Matrix(spec_.size(), inputs_ + 1);
    adam_ = AdamState(linear_.data().size());
  }
}

Vector TdHead::predict(std::span<const double> x) const {
  if (x.size() != inputs_) throw DimensionError("TdHead: feature size");
  if (opts_.hidden > 0) return head_forward(relu_, x);
  Vector out(spec_.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    double acc = linear_(m, inputs_);
    for (std::size_t i = 0; i < inputs_; ++i) acc += linear_(m, i) * x[i];
    out[m] = acc;
  }
  return out;
}

void TdHead::update(const Transition& tr, std::span<const double> x_t, std::span<const double> x_next, Rng& rng) {
  last_terms_ = td_terms(spec_, tr, predict(x_t), predict(x_next), &rng);
  Vector g(spec_.size());
  for (std::size_t m = 0; m < g.size(); ++m) g[m] = last_terms_.rho[m] * last_terms_.delta[m];
  Vector dir;
  Vector* theta = nullptr;
  if (opts_.hidden > 0) {
    dir.assign(relu_.theta.size(), 0.0);
    head_backward(relu_, x_t, head_forward_full(relu_, x_t), g, dir, {});
    theta = &relu_.theta;
  } else {
    dir.assign(linear_.data().size(), 0.0);
    for (std::size_t m = 0; m < g.size(); ++m) {
      if (g[m] == 0.0) continue;
      for (std::size_t i = 0; i < inputs_; ++i) dir[m * (inputs_ + 1) + i] = g[m] * x_t[i];
      dir[m * (inputs_ + 1) + inputs_] = g[m];
    }
    theta = &linear_.data();
  }
  if (opts_.optimizer == OptimizerKind::kAdam) {
    for (double& v : dir) v = -v;
    adam_step(adam_, *theta, dir, opts_.alpha);
  } else {
    axpy(opts_.alpha, dir, *theta);
  }
  require_finite(*theta, "td head parameters");
}

Matrix TdHead::task_weights() const {
  if (opts_.hidden == 0) {
    Matrix w(spec_.size(), inputs_);
    for (std::size_t m = 0; m < spec_.size(); ++m)
      for (std::size_t i = 0; i < inputs_; ++i) w(m, i) = linear_(m, i);
    return w;
  }
  Matrix w(relu_.hidden, inputs_);
  for (std::size_t h = 0; h < relu_.hidden; ++h)
    for (std::size_t i = 0; i < inputs_; ++i) w(h, i) = relu_.theta[relu_.f_index(i, h)];
  return w;
}

void TdHead::remove_inputs(const std::vector<std::size_t>& rows) {
  const std::set<std::size_t> drop(rows.begin(), rows.end());
  for (std::size_t r : drop) {
    if (r >= inputs_) throw std::out_of_range("TdHead::remove_inputs: index");
  }
  if (opts_.hidden > 0) {
    relu_.remove_inputs(rows);
    adam_ = AdamState(relu_.theta.size());
  } else {
    Matrix next(spec_.size(), inputs_ - drop.size() + 1);
    for (std::size_t m = 0; m < spec_.size(); ++m) {
      std::size_t c = 0;
      for (std::size_t i = 0; i <= inputs_; ++i) {
        if (i < inputs_ && drop.count(i)) continue;
        next(m, c++) = linear_(m, i);
      }
    }
    linear_ = std::move(next);
    adam_ = AdamState(linear_.data().size());
  }
  inputs_ -= drop.size();
}

void TdHead::add_inputs(std::size_t count) {
  if (opts_.hidden > 0) {
    relu_.add_inputs(count);
    adam_ = AdamState(relu_.theta.size());
  } else {
    Matrix next(spec_.size(), inputs_ + count + 1);
    for (std::size_t m = 0; m < spec_.size(); ++m) {
      for (std::size_t i = 0; i < inputs_; ++i) next(m, i) = linear_(m, i);
      next(m, inputs_ + count) = linear_(m, inputs_);
    }
    linear_ = std::move(next);
    adam_ = AdamState(linear_.data().size());
  }
  inputs_ += count;
}

}  // namespace gvfn
