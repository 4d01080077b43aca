#include "gvfn/gvfn_core.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gvfn {

ActivationValues activation_and_derivatives(const Activation& act, double pre) {
  switch (act.kind) {
    case ActivationKind::kSigmoid: {
      const double s = pre >= 0.0 ? 1.0 / (1.0 + std::exp(-pre)) : std::exp(pre) / (1.0 + std::exp(pre));
      const double d1 = s * (1.0 - s);
      return {s, d1, d1 * (1.0 - 2.0 * s)};
    }
    case ActivationKind::kTanh: {
      const double t = std::tanh(pre);
      const double d1 = 1.0 - t * t;
      return {t, d1, -2.0 * t * d1};
    }
    case ActivationKind::kClippedLinear: {
      if (pre <= act.lo) return {act.lo, 0.0, 0.0};
      if (pre >= act.hi) return {act.hi, 0.0, 0.0};
      return {pre, 1.0, 0.0};
    }
  }
  throw std::logic_error("unknown activation");
}

double activate(const Activation& act, double pre) { return activation_and_derivatives(act, pre).value; }

ActivationKind parse_activation_kind(const std::string& name) {
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "clipped-linear" || name == "linear") return ActivationKind::kClippedLinear;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kClippedLinear: return "clipped-linear";
  }
  return "?";
}

GvfnParams::GvfnParams(std::size_t num_units, std::size_t input_dim, std::size_t num_actions, Activation act)
    : n_(num_units), d_(input_dim), actions_(num_actions), act_(act) {
  if (num_actions == 0) throw DimensionError("GvfnParams: need at least one action block");
  if (act.kind == ActivationKind::kClippedLinear && !(act.lo < act.hi)) {
    throw std::invalid_argument("clipped-linear bounds need lo < hi");
  }
  theta_.assign(actions_ * block_size(), 0.0);
}

void GvfnParams::randomize(Rng& rng) {
  const double r = 1.0 / std::sqrt(static_cast<double>(width()));
  std::uniform_real_distribution<double> u(-r, r);
  for (double& v : theta_) v = u(rng);
}

void GvfnParams::remove_units(const std::vector<std::size_t>& units) {
  const std::set<std::size_t> drop(units.begin(), units.end());
  for (std::size_t u : drop) {
    if (u >= n_) throw DimensionError("remove_units: unit out of range");
  }
  const std::size_t n_new = n_ - drop.size();
  const std::size_t w_new = d_ + n_new;
  Vector next;
  next.reserve(actions_ * n_new * w_new);
  for (std::size_t a = 0; a < actions_; ++a) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (drop.count(i)) continue;
      const auto r = row(a, i);
      for (std::size_t k = 0; k < d_; ++k) next.push_back(r[k]);
      for (std::size_t k = 0; k < n_; ++k) {
        if (!drop.count(k)) next.push_back(r[d_ + k]);
      }
    }
  }
  n_ = n_new;
  theta_ = std::move(next);
}

void GvfnParams::add_units(std::size_t count, Rng& rng) {
  const std::size_t n_new = n_ + count;
  const std::size_t w_new = d_ + n_new;
  const double r = 1.0 / std::sqrt(static_cast<double>(w_new));
  std::uniform_real_distribution<double> u(-r, r);
  Vector next(actions_ * n_new * w_new, 0.0);
  for (std::size_t a = 0; a < actions_; ++a) {
    for (std::size_t i = 0; i < n_new; ++i) {
      double* dst = next.data() + a * n_new * w_new + i * w_new;
      if (i < n_) {
        const auto src = row(a, i);
        std::copy(src.begin(), src.end(), dst);
        for (std::size_t k = w_new - count; k < w_new; ++k) dst[k] = u(rng);
      } else {
        for (std::size_t k = 0; k < w_new; ++k) dst[k] = u(rng);
      }
    }
  }
  n_ = n_new;
  theta_ = std::move(next);
}

Vector initial_state(const GvfnParams& params) {
  const double v = params.activation().kind == ActivationKind::kSigmoid ? 0.5 : 0.0;
  return Vector(params.num_units(), v);
}

std::size_t action_block(const GvfnParams& params, int action) {
  if (params.num_actions() == 1) return 0;
  if (action < 0 || static_cast<std::size_t>(action) >= params.num_actions()) {
    throw std::invalid_argument("action " + std::to_string(action) + " outside the action set");
  }
  return static_cast<std::size_t>(action);
}

Vector pre_activations(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                       int action) {
  if (prev.size() != params.num_units()) throw DimensionError("state_update: state size");
  if (input.size() != params.input_dim()) throw DimensionError("state_update: input size");
  const std::size_t a = action_block(params, action);
  const std::size_t d = params.input_dim();
  Vector pre(params.num_units(), 0.0);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const auto r = params.row(a, i);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += r[k] * input[k];
    for (std::size_t k = 0; k < prev.size(); ++k) s += r[d + k] * prev[k];
    pre[i] = s;
  }
  return pre;
}

Vector state_update(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                    int action) {
  Vector s = pre_activations(params, prev, input, action);
  for (double& v : s) v = activate(params.activation(), v);
  return s;
}

HeadParams::HeadParams(std::size_t inputs, std::size_t hidden, std::size_t outputs)
    : inputs(inputs), hidden(hidden), outputs(outputs),
      theta(inputs * hidden + hidden + hidden * outputs + outputs, 0.0) {}

void HeadParams::randomize(Rng& rng) {
  std::fill(theta.begin(), theta.end(), 0.0);
  const double rf = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(inputs, 1)));
  const double rw = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(hidden, 1)));
  std::uniform_real_distribution<double> uf(-rf, rf);
  std::uniform_real_distribution<double> uw(-rw, rw);
  for (std::size_t i = 0; i < inputs; ++i)
    for (std::size_t h = 0; h < hidden; ++h) theta[f_index(i, h)] = uf(rng);
  for (std::size_t h = 0; h < hidden; ++h)
    for (std::size_t m = 0; m < outputs; ++m) theta[w_index(h, m)] = uw(rng);
}

void HeadParams::remove_inputs(const std::vector<std::size_t>& rows) {
  const std::set<std::size_t> drop(rows.begin(), rows.end());
  HeadParams next(inputs - drop.size(), hidden, outputs);
  std::size_t r = 0;
  for (std::size_t i = 0; i < inputs; ++i) {
    if (drop.count(i)) continue;
    for (std::size_t h = 0; h < hidden; ++h) next.theta[next.f_index(r, h)] = theta[f_index(i, h)];
    ++r;
  }
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(bf_index(0)), theta.end(),
            next.theta.begin() + static_cast<std::ptrdiff_t>(next.bf_index(0)));
  *this = std::move(next);
}

void HeadParams::add_inputs(std::size_t count) {
  HeadParams next(inputs + count, hidden, outputs);
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(bf_index(0)), next.theta.begin());
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(bf_index(0)), theta.end(),
            next.theta.begin() + static_cast<std::ptrdiff_t>(next.bf_index(0)));
  *this = std::move(next);
}

HeadForward head_forward_full(const HeadParams& head, std::span<const double> state) {
  if (state.size() != head.inputs) throw DimensionError("head_forward: state size");
  HeadForward f;
  f.hidden_pre.assign(head.hidden, 0.0);
  for (std::size_t h = 0; h < head.hidden; ++h) f.hidden_pre[h] = head.theta[head.bf_index(h)];
  for (std::size_t i = 0; i < head.inputs; ++i) {
    const double s = state[i];
    if (s == 0.0) continue;
    const double* frow = head.theta.data() + head.f_index(i, 0);
    for (std::size_t h = 0; h < head.hidden; ++h) f.hidden_pre[h] += s * frow[h];
  }
  f.hidden.resize(head.hidden);
  for (std::size_t h = 0; h < head.hidden; ++h) f.hidden[h] = std::max(0.0, f.hidden_pre[h]);
  f.output.assign(head.outputs, 0.0);
  for (std::size_t m = 0; m < head.outputs; ++m) f.output[m] = head.theta[head.bw_index(m)];
  for (std::size_t h = 0; h < head.hidden; ++h) {
    const double x = f.hidden[h];
    if (x == 0.0) continue;
    const double* wrow = head.theta.data() + head.w_index(h, 0);
    for (std::size_t m = 0; m < head.outputs; ++m) f.output[m] += x * wrow[m];
  }
  return f;
}

Vector head_forward(const HeadParams& head, std::span<const double> state) {
  return head_forward_full(head, state).output;
}

void head_backward(const HeadParams& head, std::span<const double> state, const HeadForward& fwd,
                   std::span<const double> g, std::span<double> grad_head, std::span<double> grad_state) {
  if (g.size() != head.outputs || grad_head.size() != head.theta.size()) {
    throw DimensionError("head_backward: shape");
  }
  Vector gh(head.hidden, 0.0);
  for (std::size_t h = 0; h < head.hidden; ++h) {
    const double* wrow = head.theta.data() + head.w_index(h, 0);
    double acc = 0.0;
    for (std::size_t m = 0; m < head.outputs; ++m) {
      grad_head[head.w_index(h, m)] += fwd.hidden[h] * g[m];
      acc += wrow[m] * g[m];
    }
    gh[h] = fwd.hidden_pre[h] > 0.0 ? acc : 0.0;
  }
  for (std::size_t m = 0; m < head.outputs; ++m) grad_head[head.bw_index(m)] += g[m];
  for (std::size_t h = 0; h < head.hidden; ++h) grad_head[head.bf_index(h)] += gh[h];
  for (std::size_t i = 0; i < head.inputs; ++i) {
    const double s = state[i];
    const double* frow = head.theta.data() + head.f_index(i, 0);
    double acc = 0.0;
    for (std::size_t h = 0; h < head.hidden; ++h) {
      grad_head[head.f_index(i, h)] += s * gh[h];
      acc += frow[h] * gh[h];
    }
    if (!grad_state.empty()) grad_state[i] += acc;
  }
}

void write_array(std::ostream& os, const std::string& tag, std::span<const double> values) {
  os << tag << ' ' << values.size() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << values[i] << (i + 1 == values.size() ? '\n' : ' ');
  }
  if (values.empty()) os << '\n';
}

Vector read_array(std::istream& is, const std::string& tag) {
  std::string got;
  std::size_t n = 0;
  if (!(is >> got >> n) || got != tag) throw std::runtime_error("checkpoint: expected section " + tag);
  Vector v(n);
  for (double& x : v) {
    if (!(is >> x)) throw std::runtime_error("checkpoint: truncated section " + tag);
  }
  return v;
}

}  // namespace gvfn
