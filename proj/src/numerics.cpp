#include "gvfn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gvfn {

namespace {

constexpr int kPowerIterationCap = 10000;
constexpr double kPowerIterationTol = 1e-10;

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_same(r.size(), cols_, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> x, const std::string& what) {
  // NaN and infinities survive multiplication by zero; finite values all vanish.
  double probe = 0.0;
  for (double v : x) probe += v * 0.0;
  if (probe == 0.0) return;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw NumericError(what + " is not finite", i);
  }
}

Vector matvec(const Matrix& m, std::span<const double> x) {
  require_same(m.cols(), x.size(), "matvec");
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> x) {
  require_same(m.rows(), x.size(), "matvec_transposed");
  Vector y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same(a.cols(), b.rows(), "matmul");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix scaled(const Matrix& m, double c) {
  Matrix out = m;
  for (double& v : out.data()) v *= c;
  return out;
}

Vector solve_linear(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  require_same(a.cols(), n, "solve_linear (square)");
  require_same(b.size(), n, "solve_linear (rhs)");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) < 1e-300) throw std::runtime_error("solve_linear: singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
      std::swap(b[pivot], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  Vector x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h) {
  Vector probe(x.begin(), x.end());
  Vector grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value", i);
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               double learning_rate) {
  require_same(params.size(), grad.size(), "adam_step (params/grad)");
  require_same(state.m.size(), params.size(), "adam_step (state)");
  require_finite(grad, "adam_step gradient");
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    const double denom = std::sqrt(vhat) + state.eps;
    if (denom > 0.0) params[i] -= learning_rate * mhat / denom;
  }
}

double spectral_norm(const Matrix& m) {
  if (!all_finite(m.data())) throw NumericError("spectral_norm: matrix not finite", 0);
  const std::size_t n = m.cols();
  if (n == 0 || m.rows() == 0) return 0.0;
  if (norm_inf(m.data()) == 0.0) return 0.0;

  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  auto gram_apply = [&](const Vector& x) { return matvec_transposed(m, matvec(m, x)); };

  Vector u = gram_apply(v);
  if (norm2(u) == 0.0) {
    // All-ones start lies in the null space; switch to a fixed ramp.
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i);
    const double nv = norm2(v);
    for (double& x : v) x /= nv;
    u = gram_apply(v);
  }
  double lambda = dot(v, u);
  double residual = 0.0;
  for (int it = 0; it < kPowerIterationCap; ++it) {
    const double nu = norm2(u);
    if (nu == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / nu;
    u = gram_apply(v);
    const double next = dot(v, u);
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += (u[i] - next * v[i]) * (u[i] - next * v[i]);
    residual = std::sqrt(residual);
    if (std::abs(next - lambda) <= kPowerIterationTol * std::max(next, 1e-300)) {
      return std::sqrt(std::max(next, 0.0));
    }
    lambda = next;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge", residual);
}

}  // namespace gvfn
