#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>

#include "gvfn/numerics.hpp"

namespace gvfn {

enum class ActivationKind { kSigmoid, kTanh, kClippedLinear };

struct Activation {
  ActivationKind kind = ActivationKind::kSigmoid;
  double lo = -10.0;
  double hi = 10.0;
};

struct ActivationValues {
  double value;
  double d1;
  double d2;
};

ActivationValues activation_and_derivatives(const Activation& act, double pre);
double activate(const Activation& act, double pre);

ActivationKind parse_activation_kind(const std::string& name);
std::string to_string(ActivationKind kind);

/// Per-action recurrent weights, flattened as theta[a][i][k] with k indexing z = [input; s].
class GvfnParams {
 public:
  GvfnParams() = default;
  /// `input_dim` includes the bias entry.
  GvfnParams(std::size_t num_units, std::size_t input_dim, std::size_t num_actions, Activation act);

  std::size_t num_units() const { return n_; }
  std::size_t input_dim() const { return d_; }
  std::size_t num_actions() const { return actions_; }
  std::size_t width() const { return d_ + n_; }
  std::size_t block_size() const { return n_ * width(); }
  std::size_t size() const { return theta_.size(); }
  const Activation& activation() const { return act_; }

  std::size_t index(std::size_t action, std::size_t unit, std::size_t k) const {
    return action * block_size() + unit * width() + k;
  }
  /// Row of W_a for unit i.
  std::span<const double> row(std::size_t action, std::size_t unit) const {
    return {theta_.data() + index(action, unit, 0), width()};
  }
  std::span<double> row(std::size_t action, std::size_t unit) {
    return {theta_.data() + index(action, unit, 0), width()};
  }

  Vector& theta() { return theta_; }
  const Vector& theta() const { return theta_; }

  /// Uniform in +-1/sqrt(width) per entry.
  void randomize(Rng& rng);

  /// Deletes units (rows and their recurrent columns) in every action block.
  void remove_units(const std::vector<std::size_t>& units);
  /// Appends freshly initialized units.
  void add_units(std::size_t count, Rng& rng);

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::size_t actions_ = 1;
  Activation act_;
  Vector theta_;
};

/// Zero pre-activation fixed point: 0.5 for sigmoid, 0 otherwise.
Vector initial_state(const GvfnParams& params);

/// Maps an out-of-range action to block 0 when the network has a single block.
std::size_t action_block(const GvfnParams& params, int action);

/// W_a [input; prev].
Vector pre_activations(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                       int action);

/// sigma(W_a [input; prev]).
Vector state_update(const GvfnParams& params, std::span<const double> prev, std::span<const double> input,
                    int action);

/// relu(s F + b_F) W + b_W.
struct HeadParams {
  HeadParams() = default;
  HeadParams(std::size_t inputs, std::size_t hidden, std::size_t outputs);

  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  // Flat layout: F (inputs x hidden), b_F (hidden), W (hidden x outputs), b_W (outputs).
  Vector theta;

  std::size_t f_index(std::size_t i, std::size_t h) const { return i * hidden + h; }
  std::size_t bf_index(std::size_t h) const { return inputs * hidden + h; }
  std::size_t w_index(std::size_t h, std::size_t m) const { return inputs * hidden + hidden + h * outputs + m; }
  std::size_t bw_index(std::size_t m) const { return inputs * hidden + hidden + hidden * outputs + m; }

  void randomize(Rng& rng);
  void remove_inputs(const std::vector<std::size_t>& rows);
  void add_inputs(std::size_t count);
};

struct HeadForward {
  Vector hidden_pre;
  Vector hidden;
  Vector output;
};

HeadForward head_forward_full(const HeadParams& head, std::span<const double> state);
Vector head_forward(const HeadParams& head, std::span<const double> state);

/// Accumulates d(g . y)/d(head) into `grad_head` and, when non-empty, d(g . y)/d(state) into `grad_state`.
void head_backward(const HeadParams& head, std::span<const double> state, const HeadForward& fwd,
                   std::span<const double> g, std::span<double> grad_head, std::span<double> grad_state);

/// Text snapshot: a shape header line followed by the flat values at full precision.
void write_array(std::ostream& os, const std::string& tag, std::span<const double> values);
Vector read_array(std::istream& is, const std::string& tag);

}  // namespace gvfn
