#include "gvfn/sensitivities.hpp"

#include <algorithm>

namespace gvfn {

TruncationBuffer::TruncationBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("TruncationBuffer: capacity must be positive");
  records_.reserve(capacity + 1);
}

void TruncationBuffer::push(StepRecord rec) {
  if (records_.size() == capacity_) records_.erase(records_.begin());
  records_.push_back(std::move(rec));
}

std::span<const StepRecord> TruncationBuffer::window(std::size_t p, std::size_t skip_newest) const {
  if (skip_newest >= records_.size()) return {};
  const std::size_t end = records_.size() - skip_newest;
  const std::size_t len = std::min(p, end);
  return {records_.data() + (end - len), len};
}

StepRecord make_record(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                       int action) {
  StepRecord rec;
  rec.z.reserve(input.size() + prev.size());
  rec.z.insert(rec.z.end(), input.begin(), input.end());
  rec.z.insert(rec.z.end(), prev.begin(), prev.end());
  rec.action = action;
  rec.pre = pre_activations(params, prev, input, action);
  return rec;
}

WindowPass forward_window(const GvfnParams& params, std::span<const StepRecord> window) {
  if (window.empty()) throw std::invalid_argument("sensitivities need a non-empty window");
  const std::size_t n = params.num_units();
  const std::size_t d = params.input_dim();
  WindowPass pass;
  pass.z.reserve(window.size());
  Vector s(window.front().z.begin() + static_cast<std::ptrdiff_t>(d), window.front().z.end());
  if (s.size() != n || window.front().z.size() != params.width()) {
    throw DimensionError("window record does not match the network shape");
  }
  for (const auto& rec : window) {
    Vector z(rec.z.begin(), rec.z.begin() + static_cast<std::ptrdiff_t>(d));
    z.insert(z.end(), s.begin(), s.end());
    const std::size_t a = action_block(params, rec.action);
    Vector d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double pre = dot(params.row(a, i), z);
      const auto av = activation_and_derivatives(params.activation(), pre);
      s[i] = av.value;
      d1[i] = av.d1;
      d2[i] = av.d2;
    }
    pass.z.push_back(std::move(z));
    pass.block.push_back(a);
    pass.d1.push_back(std::move(d1));
    pass.d2.push_back(std::move(d2));
  }
  pass.final_state = std::move(s);
  return pass;
}

namespace {

// lambda_prev[k] = sum_i W_a(i, d + k) u[i]
void recurrent_transpose(const GvfnParams& params, std::size_t a, std::span<const double> theta,
                         std::span<const double> u, std::span<double> out) {
  const std::size_t n = params.num_units();
  const std::size_t d = params.input_dim();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    const double* r = theta.data() + params.index(a, i, d);
    for (std::size_t k = 0; k < n; ++k) out[k] += r[k] * ui;
  }
}

}  // namespace

Vector vjp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> v) {
  const std::size_t n = params.num_units();
  if (v.size() != n) throw DimensionError("vjp: cotangent size");
  const WindowPass pass = forward_window(params, window);
  Vector grad(params.size(), 0.0);
  Vector lambda(v.begin(), v.end());
  Vector u(n), next(n);
  for (std::size_t t = pass.z.size(); t-- > 0;) {
    const std::size_t a = pass.block[t];
    const Vector& z = pass.z[t];
    for (std::size_t i = 0; i < n; ++i) u[i] = lambda[i] * pass.d1[t][i];
    for (std::size_t i = 0; i < n; ++i) {
      if (u[i] == 0.0) continue;
      double* g = grad.data() + params.index(a, i, 0);
      for (std::size_t k = 0; k < z.size(); ++k) g[k] += u[i] * z[k];
    }
    if (t > 0) {
      recurrent_transpose(params, a, params.theta(), u, next);
      std::swap(lambda, next);
    }
  }
  return grad;
}

Vector jvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w) {
  const std::size_t n = params.num_units();
  const std::size_t d = params.input_dim();
  if (w.size() != params.size()) throw DimensionError("jvp: tangent size");
  const WindowPass pass = forward_window(params, window);
  Vector sdot(n, 0.0), next(n);
  for (std::size_t t = 0; t < pass.z.size(); ++t) {
    const std::size_t a = pass.block[t];
    const Vector& z = pass.z[t];
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = params.row(a, i);
      const double* wr = w.data() + params.index(a, i, 0);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += r[d + k] * sdot[k];
      for (std::size_t k = 0; k < z.size(); ++k) acc += wr[k] * z[k];
      next[i] = pass.d1[t][i] * acc;
    }
    std::swap(sdot, next);
  }
  return sdot;
}

Vector contracted_hvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w,
                      std::span<const double> c) {
  const std::size_t n = params.num_units();
  const std::size_t d = params.input_dim();
  if (w.size() != params.size()) throw DimensionError("contracted_hvp: probe size");
  if (c.size() != n) throw DimensionError("contracted_hvp: coefficient size");
  const WindowPass pass = forward_window(params, window);
  const std::size_t len = pass.z.size();

  // Tangent forward sweep: zdot carries [0; sdot_prev], predot the pre-activation tangent.
  std::vector<Vector> zdot(len), predot(len);
  Vector sdot(n, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t a = pass.block[t];
    const Vector& z = pass.z[t];
    zdot[t].assign(d + n, 0.0);
    std::copy(sdot.begin(), sdot.end(), zdot[t].begin() + static_cast<std::ptrdiff_t>(d));
    predot[t].assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = params.row(a, i);
      const double* wr = w.data() + params.index(a, i, 0);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += r[d + k] * sdot[k];
      for (std::size_t k = 0; k < z.size(); ++k) acc += wr[k] * z[k];
      predot[t][i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) sdot[i] = pass.d1[t][i] * predot[t][i];
  }

  // Reverse sweep with R-operator companions; R{lambda_end} = 0 since c is held fixed.
  Vector out(params.size(), 0.0);
  Vector lambda(c.begin(), c.end()), rlambda(n, 0.0);
  Vector u(n), ru(n), tmp(n), tmp2(n);
  for (std::size_t t = len; t-- > 0;) {
    const std::size_t a = pass.block[t];
    const Vector& z = pass.z[t];
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = lambda[i] * pass.d1[t][i];
      ru[i] = rlambda[i] * pass.d1[t][i] + lambda[i] * pass.d2[t][i] * predot[t][i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double* g = out.data() + params.index(a, i, 0);
      for (std::size_t k = 0; k < z.size(); ++k) g[k] += ru[i] * z[k] + u[i] * zdot[t][k];
    }
    if (t > 0) {
      recurrent_transpose(params, a, params.theta(), u, tmp);
      recurrent_transpose(params, a, params.theta(), ru, rlambda);
      recurrent_transpose(params, a, w, u, tmp2);
      for (std::size_t k = 0; k < n; ++k) rlambda[k] += tmp2[k];
      std::swap(lambda, tmp);
    }
  }
  return out;
}

Matrix bptt_sensitivities(const GvfnParams& params, std::span<const StepRecord> window) {
  const std::size_t n = params.num_units();
  Matrix phi(n, params.size());
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector row = vjp(params, window, e);
    std::copy(row.begin(), row.end(), phi.row(j).begin());
    e[j] = 0.0;
  }
  return phi;
}

Matrix bptt_sensitivities(const TruncationBuffer& buffer, const GvfnParams& params) {
  if (buffer.empty()) throw std::invalid_argument("bptt_sensitivities: empty buffer");
  return bptt_sensitivities(params, buffer.window(buffer.capacity()));
}

SensitivityState SensitivityState::zeros(const GvfnParams& params) {
  SensitivityState s;
  s.phi = Matrix(params.num_units(), params.size());
  return s;
}

SensitivityState SensitivityState::zeros(const GvfnParams& params, Vector probe) {
  if (probe.size() != params.size()) throw DimensionError("SensitivityState: probe size");
  SensitivityState s = zeros(params);
  s.xi.assign(params.num_units(), 0.0);
  s.r_phi = Matrix(params.num_units(), params.size());
  s.probe = std::move(probe);
  return s;
}

SensitivityState rtrl_step(const SensitivityState& prev, const GvfnParams& params, std::span<const double> z,
                           std::span<const double> pre, int action) {
  const std::size_t n = params.num_units();
  const std::size_t d = params.input_dim();
  const std::size_t np = params.size();
  if (prev.phi.rows() != n || prev.phi.cols() != np) throw DimensionError("rtrl_step: phi shape");
  if (z.size() != params.width() || pre.size() != n) throw DimensionError("rtrl_step: z/pre size");
  const std::size_t a = action_block(params, action);
  const bool with_r = !prev.probe.empty();
  const auto& w = prev.probe;

  Matrix phi_pre(n, np);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = params.row(a, i);
    auto out = phi_pre.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = r[d + k];
      if (wk != 0.0) axpy(wk, prev.phi.row(k), out);
    }
    for (std::size_t kk = 0; kk < z.size(); ++kk) out[params.index(a, i, kk)] += z[kk];
  }

  SensitivityState next;
  next.phi = Matrix(n, np);
  std::vector<ActivationValues> av(n);
  for (std::size_t i = 0; i < n; ++i) {
    av[i] = activation_and_derivatives(params.activation(), pre[i]);
    auto dst = next.phi.row(i);
    const auto src = phi_pre.row(i);
    for (std::size_t c = 0; c < np; ++c) dst[c] = av[i].d1 * src[c];
  }
  if (!with_r) return next;

  next.probe = prev.probe;
  next.xi.assign(n, 0.0);
  next.r_phi = Matrix(n, np);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = params.row(a, i);
    double predot = 0.0;
    for (std::size_t k = 0; k < n; ++k) predot += r[d + k] * prev.xi[k];
    for (std::size_t kk = 0; kk < z.size(); ++kk) predot += w[params.index(a, i, kk)] * z[kk];

    Vector rpre(np, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = r[d + k];
      if (wk != 0.0) axpy(wk, prev.r_phi.row(k), rpre);
      const double wdot = w[params.index(a, i, d + k)];
      if (wdot != 0.0) axpy(wdot, prev.phi.row(k), rpre);
    }
    for (std::size_t k = 0; k < n; ++k) rpre[params.index(a, i, d + k)] += prev.xi[k];

    auto dst = next.r_phi.row(i);
    const auto ppre = phi_pre.row(i);
    for (std::size_t c = 0; c < np; ++c) dst[c] = av[i].d2 * predot * ppre[c] + av[i].d1 * rpre[c];
    next.xi[i] = av[i].d1 * predot;
  }
  return next;
}

Matrix hvp(const GvfnParams& params, std::span<const StepRecord> window, std::span<const double> w) {
  if (w.size() != params.size()) throw DimensionError("hvp: probe size");
  if (window.empty()) throw std::invalid_argument("hvp: empty window");
  const std::size_t d = params.input_dim();
  SensitivityState st = SensitivityState::zeros(params, Vector(w.begin(), w.end()));
  Vector s(window.front().z.begin() + static_cast<std::ptrdiff_t>(d), window.front().z.end());
  for (const auto& rec : window) {
    const std::span<const double> input(rec.z.data(), d);
    const StepRecord fresh = make_record(params, s, input, rec.action);
    st = rtrl_step(st, params, fresh.z, fresh.pre, rec.action);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = activate(params.activation(), fresh.pre[i]);
  }
  return st.r_phi;
}

}  // namespace gvfn
