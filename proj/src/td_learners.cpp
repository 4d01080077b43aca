#include "gvfn/td_learners.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace gvfn {

TdTerms td_terms(const NetworkSpec& spec, const Transition& tr, std::span<const double> s_t,
                 std::span<const double> s_next, Rng* rng) {
  const std::size_t n = spec.size();
  if (s_t.size() != n || s_next.size() != n) throw DimensionError("td_terms: state size");
  if (!(tr.mu >= 0.0 && tr.mu <= 1.0)) throw std::invalid_argument("td_terms: mu outside [0,1]");
  TdTerms terms;
  terms.cumulant.resize(n);
  terms.gamma.resize(n);
  terms.rho.resize(n);
  terms.delta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double pi = target_policy_prob(spec, j, tr.action);
    if (tr.mu == 0.0) {
      if (pi > 0.0) throw CoverageError("behavior probability 0 for an action gvf " + std::to_string(j) + " takes");
      terms.rho[j] = 0.0;
    } else {
      terms.rho[j] = pi / tr.mu;
    }
    terms.cumulant[j] = cumulant_value(spec, j, tr, s_next, rng);
    terms.gamma[j] = continuation_value(spec, j, tr);
    terms.delta[j] = terms.cumulant[j] + terms.gamma[j] * s_next[j] - s_t[j];
  }
  return terms;
}

Vector rtd_direction(const Matrix& phi, const TdTerms& terms) {
  if (phi.rows() != terms.delta.size()) throw DimensionError("rtd_direction: phi rows");
  Vector g(phi.cols(), 0.0);
  for (std::size_t j = 0; j < phi.rows(); ++j) {
    const double c = terms.rho[j] * terms.delta[j];
    if (c != 0.0) axpy(c, phi.row(j), g);
  }
  return g;
}

void rtd_step(GvfnParams& params, const Matrix& phi_t, const TdTerms& terms, double alpha) {
  if (phi_t.cols() != params.size()) throw DimensionError("rtd_step: phi columns");
  const Vector g = rtd_direction(phi_t, terms);
  auto& theta = params.theta();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += alpha * g[i];
  require_finite(theta, "rtd_step parameters");
}

Vector rgtd_correction_weights(const NetworkSpec& spec, const TdTerms& terms, std::span<const double> dhat) {
  const std::size_t n = spec.size();
  Vector u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) u[i] = terms.rho[i] * terms.gamma[i] * dhat[i];
  for (const auto& e : spec.edges()) u[e.to] += terms.rho[e.from] * e.weight * dhat[e.from];
  return u;
}

void rgtd_step(GvfnParams& params, GtdAuxWeights& aux, const NetworkSpec& spec, const TdTerms& terms,
               const Matrix& phi_t, const Matrix& phi_next, const Matrix& hvp_t, double alpha) {
  const std::size_t n = spec.size();
  const std::size_t np = params.size();
  if (phi_t.cols() != np || phi_next.cols() != np || hvp_t.cols() != np || aux.w.size() != np) {
    throw DimensionError("rgtd_step: parameter dimension");
  }
  Vector dhat(n);
  for (std::size_t j = 0; j < n; ++j) dhat[j] = dot(phi_t.row(j), aux.w);

  const Vector g = rtd_direction(phi_t, terms);
  const Vector u = rgtd_correction_weights(spec, terms, dhat);
  Vector corr(np, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] != 0.0) axpy(u[i], phi_next.row(i), corr);
  }
  Vector psi(np, 0.0);
  Vector wgrad(np, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = terms.rho[j] * terms.delta[j] - dhat[j];
    if (c != 0.0) axpy(c, hvp_t.row(j), psi);
    const double b = terms.rho[j] * (terms.delta[j] - dhat[j]);
    if (b != 0.0) axpy(b, phi_t.row(j), wgrad);
  }
  auto& theta = params.theta();
  for (std::size_t i = 0; i < np; ++i) {
    theta[i] += alpha * (g[i] - corr[i]);
    theta[i] -= alpha * psi[i];
  }
  for (std::size_t i = 0; i < np; ++i) aux.w[i] += aux.beta * wgrad[i];
  require_finite(theta, "rgtd_step parameters");
  require_finite(aux.w, "rgtd_step secondary weights");
}

TdAlgorithm parse_td_algorithm(const std::string& name) {
  if (name == "rtd") return TdAlgorithm::kRtd;
  if (name == "rgtd") return TdAlgorithm::kRgtd;
  throw std::invalid_argument("unknown td algorithm: " + name);
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "constant") return OptimizerKind::kConstant;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

GvfnLearner::GvfnLearner(NetworkSpec spec, GvfnParams params, LearnerOptions opts)
    : spec_(std::move(spec)),
      params_(std::move(params)),
      opts_(opts),
      buffer_(opts.truncation + 1),
      state_(initial_state(params_)),
      adam_(params_.size()),
      accum_(params_.size(), 0.0) {
  if (spec_.size() != params_.num_units()) throw DimensionError("GvfnLearner: spec/params unit count");
  if (opts_.truncation == 0) throw std::invalid_argument("GvfnLearner: truncation must be >= 1");
  if (opts_.batch == 0) throw std::invalid_argument("GvfnLearner: batch must be >= 1");
  aux_.w.assign(params_.size(), 0.0);
  aux_.beta = opts_.beta;
}

void GvfnLearner::step(const Transition& tr, std::span<const double> input, Rng& rng) {
  const std::size_t n = spec_.size();
  const std::size_t p = opts_.truncation;
  StepRecord rec = make_record(params_, state_, input, tr.action);
  Vector next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = activate(params_.activation(), rec.pre[i]);

  if (buffer_.empty()) {
    buffer_.push(std::move(rec));
    state_ = std::move(next);
    ++steps_;
    return;
  }

  last_terms_ = td_terms(spec_, tr, state_, next, &rng);
  const TdTerms& terms = last_terms_;
  Vector v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = terms.rho[j] * terms.delta[j];
  const auto window_t = buffer_.window(p);
  Vector direction = vjp(params_, window_t, v);

  if (opts_.algorithm == TdAlgorithm::kRtd) {
    buffer_.push(std::move(rec));
    apply(direction, nullptr);
  } else {
    const Vector dhat = jvp(params_, window_t, aux_.w);
    Vector c(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      c[j] = terms.rho[j] * terms.delta[j] - dhat[j];
      b[j] = terms.rho[j] * (terms.delta[j] - dhat[j]);
    }
    const Vector psi = contracted_hvp(params_, window_t, aux_.w, c);
    const Vector wgrad = vjp(params_, window_t, b);
    buffer_.push(std::move(rec));
    const Vector u = rgtd_correction_weights(spec_, terms, dhat);
    const Vector corr = vjp(params_, buffer_.window(p), u);
    for (std::size_t i = 0; i < direction.size(); ++i) direction[i] = direction[i] - corr[i];
    apply(direction, &psi);
    for (std::size_t i = 0; i < aux_.w.size(); ++i) aux_.w[i] += aux_.beta * wgrad[i];
    require_finite(aux_.w, "secondary weights");
  }
  state_ = std::move(next);
  ++steps_;
}

void GvfnLearner::apply(const Vector& direction, const Vector* psi) {
  auto& theta = params_.theta();
  const std::size_t np = theta.size();
  if (opts_.optimizer == OptimizerKind::kConstant && opts_.batch == 1 && opts_.clip_norm <= 0.0) {
    for (std::size_t i = 0; i < np; ++i) theta[i] += opts_.alpha * direction[i];
    if (psi != nullptr) {
      for (std::size_t i = 0; i < np; ++i) theta[i] -= opts_.alpha * (*psi)[i];
    }
    require_finite(theta, "gvfn parameters");
    return;
  }
  for (std::size_t i = 0; i < np; ++i) accum_[i] += direction[i] - (psi ? (*psi)[i] : 0.0);
  if (++accum_count_ < opts_.batch) return;
  const double inv = 1.0 / static_cast<double>(accum_count_);
  for (double& x : accum_) x *= inv;
  if (opts_.clip_norm > 0.0) {
    const double nrm = norm2(accum_);
    if (nrm > opts_.clip_norm) {
      for (double& x : accum_) x *= opts_.clip_norm / nrm;
    }
  }
  if (opts_.optimizer == OptimizerKind::kAdam) {
    for (double& x : accum_) x = -x;
    adam_step(adam_, theta, accum_, opts_.alpha);
  } else {
    for (std::size_t i = 0; i < np; ++i) theta[i] += opts_.alpha * accum_[i];
  }
  std::fill(accum_.begin(), accum_.end(), 0.0);
  accum_count_ = 0;
  require_finite(theta, "gvfn parameters");
}

void GvfnLearner::remove_units(const std::vector<std::size_t>& units, NetworkSpec new_spec) {
  const std::size_t n_old = params_.num_units();
  // The aux vector shares theta's layout, so reuse the params excision on a copy holding w.
  GvfnParams w_as_params = params_;
  w_as_params.theta() = aux_.w;
  w_as_params.remove_units(units);
  GvfnParams acc_as_params = params_;
  acc_as_params.theta() = accum_;
  acc_as_params.remove_units(units);
  params_.remove_units(units);
  if (new_spec.size() != params_.num_units()) throw DimensionError("remove_units: new spec size");
  spec_ = std::move(new_spec);
  aux_.w = std::move(w_as_params.theta());
  accum_ = std::move(acc_as_params.theta());
  Vector s;
  for (std::size_t i = 0; i < n_old; ++i) {
    if (std::find(units.begin(), units.end(), i) == units.end()) s.push_back(state_[i]);
  }
  state_ = std::move(s);
  adam_ = AdamState(params_.size(), adam_.beta1, adam_.beta2, adam_.eps);
  buffer_.clear();
}

void GvfnLearner::add_units(std::size_t count, NetworkSpec new_spec, Rng& rng) {
  params_.add_units(count, rng);
  if (new_spec.size() != params_.num_units()) throw DimensionError("add_units: new spec size");
  spec_ = std::move(new_spec);
  aux_.w.assign(params_.size(), 0.0);
  accum_.assign(params_.size(), 0.0);
  accum_count_ = 0;
  const Vector init = initial_state(params_);
  state_.resize(params_.num_units(), init.empty() ? 0.0 : init.back());
  adam_ = AdamState(params_.size(), adam_.beta1, adam_.beta2, adam_.eps);
  buffer_.clear();
}

void GvfnLearner::save(std::ostream& os) const {
  write_array(os, "theta", params_.theta());
  write_array(os, "aux_w", aux_.w);
  write_array(os, "state", state_);
  write_array(os, "adam_m", adam_.m);
  write_array(os, "adam_v", adam_.v);
  write_array(os, "accum", accum_);
  const Vector counters{static_cast<double>(adam_.t), static_cast<double>(accum_count_),
                        static_cast<double>(steps_), static_cast<double>(buffer_.size())};
  write_array(os, "counters", counters);
  for (const auto& rec : buffer_.records()) {
    write_array(os, "rec_z", rec.z);
    write_array(os, "rec_pre", rec.pre);
    write_array(os, "rec_action", Vector{static_cast<double>(rec.action)});
  }
}

void GvfnLearner::load(std::istream& is) {
  auto expect_size = [](const Vector& v, std::size_t n, const char* what) {
    if (v.size() != n) throw std::runtime_error(std::string("checkpoint: size mismatch in ") + what);
  };
  Vector theta = read_array(is, "theta");
  expect_size(theta, params_.size(), "theta");
  Vector w = read_array(is, "aux_w");
  expect_size(w, params_.size(), "aux_w");
  Vector s = read_array(is, "state");
  expect_size(s, params_.num_units(), "state");
  Vector m = read_array(is, "adam_m");
  Vector v = read_array(is, "adam_v");
  Vector acc = read_array(is, "accum");
  expect_size(m, params_.size(), "adam_m");
  expect_size(v, params_.size(), "adam_v");
  expect_size(acc, params_.size(), "accum");
  const Vector counters = read_array(is, "counters");
  expect_size(counters, 4, "counters");
  TruncationBuffer buf(buffer_.capacity());
  for (std::size_t r = 0; r < static_cast<std::size_t>(counters[3]); ++r) {
    StepRecord rec;
    rec.z = read_array(is, "rec_z");
    rec.pre = read_array(is, "rec_pre");
    rec.action = static_cast<int>(read_array(is, "rec_action").at(0));
    buf.push(std::move(rec));
  }
  params_.theta() = std::move(theta);
  aux_.w = std::move(w);
  state_ = std::move(s);
  adam_.m = std::move(m);
  adam_.v = std::move(v);
  adam_.t = static_cast<std::uint64_t>(counters[0]);
  accum_ = std::move(acc);
  accum_count_ = static_cast<std::size_t>(counters[1]);
  steps_ = static_cast<std::uint64_t>(counters[2]);
  buffer_ = std::move(buf);
}

}  // namespace gvfn
