#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gvfn {

using Vector = std::vector<double>;

/// Per-run random source; every run owns one, seeded from its config.
using Rng = std::mt19937_64;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a value that must be finite is not.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t coordinate)
      : std::runtime_error(what + " (coordinate " + std::to_string(coordinate) + ")"),
        coordinate_(coordinate) {}
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> x);
/// Throws NumericError naming the first non-finite coordinate.
void require_finite(std::span<const double> x, const std::string& what);

Vector matvec(const Matrix& m, std::span<const double> x);
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix scaled(const Matrix& m, double c);

/// Solves A x = b by LU with partial pivoting. Throws on a singular system.
Vector solve_linear(Matrix a, Vector b);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h.
Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h);

struct AdamState {
  explicit AdamState(std::size_t n = 0, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m(n, 0.0), v(n, 0.0), beta1(beta1), beta2(beta2), eps(eps) {}

  Vector m;
  Vector v;
  std::uint64_t t = 0;
  double beta1;
  double beta2;
  double eps;
};

/// One bias-corrected ADAM descent step on `params` (in place) for gradient `grad`.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               double learning_rate);

/// Largest singular value by power iteration on M^T M, from the normalized all-ones vector.
double spectral_norm(const Matrix& m);

}  // namespace gvfn
