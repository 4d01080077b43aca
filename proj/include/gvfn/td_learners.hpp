#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "gvfn/gvf_spec.hpp"
#include "gvfn/gvfn_core.hpp"
#include "gvfn/numerics.hpp"
#include "gvfn/sensitivities.hpp"

namespace gvfn {

/// Behavior took an action some target policy wants but reported mu = 0.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-GVF TD quantities for one transition.
struct TdTerms {
  Vector cumulant;
  Vector gamma;
  Vector rho;
  Vector delta;
};

/// delta_j = C_j + gamma_j s_{t+1,j} - s_{t,j}, rho_j = pi_j(a) / mu.
TdTerms td_terms(const NetworkSpec& spec, const Transition& tr, std::span<const double> s_t,
                 std::span<const double> s_next, Rng* rng = nullptr);

/// sum_j rho_j delta_j phi_j.
Vector rtd_direction(const Matrix& phi, const TdTerms& terms);

/// theta += alpha sum_j rho_j delta_j phi_j. s_{t+1} is only a target; its sensitivity never enters.
void rtd_step(GvfnParams& params, const Matrix& phi_t, const TdTerms& terms, double alpha);

struct GtdAuxWeights {
  Vector w;
  double beta = 0.0;
};

/// The per-GVF weights u'_i multiplying phi'_i in the gradient correction:
/// rho_i gamma_i dhat_i + sum_j rho_j c(j,i) dhat_j.
Vector rgtd_correction_weights(const NetworkSpec& spec, const TdTerms& terms, std::span<const double> dhat);

/// Full-matrix recurrent GTD step. `hvp_t` holds rows (d^2 s_t,j / d theta^2) w.
void rgtd_step(GvfnParams& params, GtdAuxWeights& aux, const NetworkSpec& spec, const TdTerms& terms,
               const Matrix& phi_t, const Matrix& phi_next, const Matrix& hvp_t, double alpha);

enum class TdAlgorithm { kRtd, kRgtd };
enum class OptimizerKind { kConstant, kAdam };

TdAlgorithm parse_td_algorithm(const std::string& name);
OptimizerKind parse_optimizer(const std::string& name);

struct LearnerOptions {
  TdAlgorithm algorithm = TdAlgorithm::kRtd;
  std::size_t truncation = 1;
  double alpha = 0.1;
  double beta = 0.01;
  OptimizerKind optimizer = OptimizerKind::kConstant;
  // Steps whose gradients are averaged before one optimizer application.
  std::size_t batch = 1;
  // Global-norm clip of the per-application direction; 0 disables.
  double clip_norm = 0.0;
};

/// Online GVFN trainer: carries the recurrent state, the truncation buffer and optimizer state.
class GvfnLearner {
 public:
  GvfnLearner(NetworkSpec spec, GvfnParams params, LearnerOptions opts);

  /// Consumes one transition: `input` is the bias-extended observation o_{t+1} the network reads,
  /// `tr` carries the action, behavior probability and cumulant observations.
  void step(const Transition& tr, std::span<const double> input, Rng& rng);

  const Vector& state() const { return state_; }
  const GvfnParams& params() const { return params_; }
  GvfnParams& params() { return params_; }
  const NetworkSpec& spec() const { return spec_; }
  const LearnerOptions& options() const { return opts_; }
  const GtdAuxWeights& aux() const { return aux_; }
  const TdTerms& last_terms() const { return last_terms_; }
  const TruncationBuffer& buffer() const { return buffer_; }
  std::uint64_t steps() const { return steps_; }

  /// Drops units from the network, the aux weights and the state; the buffer restarts.
  void remove_units(const std::vector<std::size_t>& units, NetworkSpec new_spec);
  /// Appends `count` fresh units described by the tail of `new_spec`.
  void add_units(std::size_t count, NetworkSpec new_spec, Rng& rng);

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  void apply(const Vector& direction, const Vector* psi);

  NetworkSpec spec_;
  GvfnParams params_;
  LearnerOptions opts_;
  TruncationBuffer buffer_;
  Vector state_;
  GtdAuxWeights aux_;
  AdamState adam_;
  Vector accum_;
  std::size_t accum_count_ = 0;
  TdTerms last_terms_;
  std::uint64_t steps_ = 0;
};

}  // namespace gvfn
