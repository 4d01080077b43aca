#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "gvfn/gvf_spec.hpp"
#include "gvfn/gvfn_core.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/td_learners.hpp"

namespace gvfn {

enum class CellKind { kSimple, kGru };

CellKind parse_cell_kind(const std::string& name);
std::string to_string(CellKind kind);

/// Unconstrained recurrent cell over z = [x; h].
///
/// Simple: h' = tanh(W z).
/// GRU: u = sigmoid(W_u z), r = sigmoid(W_r z), c = tanh(W_c [x; r * h]), h' = (1 - u) * c + u * h.
/// Blocks are stored in that order, each hidden x (input + hidden), row-major.
class RnnCell {
 public:
  RnnCell() = default;
  /// `input_dim` includes the bias entry.
  RnnCell(CellKind kind, std::size_t input_dim, std::size_t hidden);

  CellKind kind() const { return kind_; }
  std::size_t input_dim() const { return d_; }
  std::size_t hidden() const { return h_; }
  std::size_t width() const { return d_ + h_; }
  std::size_t num_blocks() const { return kind_ == CellKind::kGru ? 3 : 1; }
  std::size_t index(std::size_t block, std::size_t unit, std::size_t k) const {
    return (block * h_ + unit) * width() + k;
  }

  Vector& theta() { return theta_; }
  const Vector& theta() const { return theta_; }

  void randomize(Rng& rng);

 private:
  CellKind kind_ = CellKind::kSimple;
  std::size_t d_ = 0;
  std::size_t h_ = 0;
  Vector theta_;
};

/// Intermediates of one cell step, kept for the backward pass.
struct CellCache {
  Vector x;
  Vector h_prev;
  Vector u;       // GRU update gate
  Vector r;       // GRU reset gate
  Vector c;       // GRU candidate / simple-cell output
  Vector h_next;
};

CellCache cell_forward(const RnnCell& cell, std::span<const double> x, std::span<const double> h_prev);

/// Adds d(g . h_next)/d(theta) into `grad` and returns d(g . h_next)/d(h_prev).
Vector cell_backward(const RnnCell& cell, const CellCache& cache, std::span<const double> g, std::span<double> grad);

/// One buffered step: the input and the (frozen) state it was applied to.
struct RnnRecord {
  Vector x;
  Vector h_prev;
};

/// Maps the recomputed final state of a window to the loss gradient on it.
using FinalGradient = std::function<Vector(std::span<const double> final_state)>;

/// Replays `window` from its first frozen state under the current cell, asks `g_final` for the
/// gradient at the last state and backpropagates it into `grad`.
void bptt_window(const RnnCell& cell, std::span<const RnnRecord> window, const FinalGradient& g_final,
                 std::span<double> grad);

struct RnnOptions {
  CellKind cell = CellKind::kGru;
  std::size_t hidden = 32;
  std::size_t truncation = 1;
  double alpha = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::size_t batch = 32;
  double clip_norm = 0.0;
  std::size_t head_hidden = 32;
  // Steps between a prediction and its supervised target.
  std::size_t delay = 0;
};

/// Online p-BPTT trainer for a recurrent cell, a relu head and optional linear TD heads.
///
/// Per step: advance() with the new input, then any of add_supervised / add_td, then end_step().
/// The head is trained either on supervised targets or, when `head_spec` is non-empty, by TD on
/// those GVFs. `aux_spec` GVFs get linear heads on [h; 1] trained by TD; their gradient reaches
/// the cell.
class RnnLearner {
 public:
  RnnLearner(std::size_t input_dim, std::size_t outputs, RnnOptions opts, Rng& rng, NetworkSpec head_spec = {},
             NetworkSpec aux_spec = {});

  /// Reads the next input; returns the head output at the new state.
  const Vector& advance(std::span<const double> input);

  /// Squared-error gradient for the prediction made `delay` advances ago.
  /// Returns false when the buffer does not reach back that far yet.
  bool add_supervised(std::span<const double> target);

  /// TD gradient for the head (if it has a spec) and the aux heads on the latest transition.
  void add_td(const Transition& tr, Rng& rng);

  /// Counts the step and applies the optimizer every `batch` steps.
  void end_step();

  const Vector& hidden_state() const { return h_; }
  const Vector& prediction() const { return pred_; }
  /// Aux head outputs at the current state.
  Vector aux_predictions() const;
  const RnnCell& cell() const { return cell_; }
  RnnCell& cell() { return cell_; }
  const HeadParams& head() const { return head_; }
  HeadParams& head() { return head_; }
  const Matrix& aux_weights() const { return aux_; }
  Matrix& aux_weights() { return aux_; }
  const RnnOptions& options() const { return opts_; }
  std::uint64_t steps() const { return steps_; }

  /// Gradient of the loss accumulated since the last optimizer application (cell, head, aux).
  const Vector& grad_cell() const { return g_cell_; }
  const Vector& grad_head() const { return g_head_; }
  const Vector& grad_aux() const { return g_aux_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  void apply();

  RnnOptions opts_;
  RnnCell cell_;
  HeadParams head_;
  Matrix aux_;  // aux GVFs x (hidden + 1)
  NetworkSpec head_spec_;
  NetworkSpec aux_spec_;
  std::deque<RnnRecord> buffer_;
  std::size_t capacity_ = 0;
  Vector h_;
  Vector h_before_;
  Vector pred_;
  Vector g_cell_, g_head_, g_aux_;
  AdamState adam_cell_, adam_head_, adam_aux_;
  std::size_t accum_count_ = 0;
  std::uint64_t steps_ = 0;
};

}  // namespace gvfn
