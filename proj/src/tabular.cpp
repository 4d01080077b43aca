#include "gvfn/tabular.hpp"

#include <algorithm>
#include <cmath>

namespace gvfn {

void TabularModel::validate() const {
  const std::size_t n = num_gvfs();
  const std::size_t h = num_states;
  if (p_pi.size() != n || cumulant.size() != n) throw DimensionError("TabularModel: per-gvf arrays differ in length");
  if (d.size() != h) throw DimensionError("TabularModel: sampling distribution size");
  double dsum = 0.0;
  for (double x : d) {
    if (x < 0.0) throw std::invalid_argument("TabularModel: negative sampling weight");
    dsum += x;
  }
  if (std::abs(dsum - 1.0) > 1e-9) throw std::invalid_argument("TabularModel: d does not sum to 1");
  for (std::size_t j = 0; j < n; ++j) {
    for (const Matrix* m : {&p_gamma[j], &p_pi[j]}) {
      if (m->rows() != h || m->cols() != h) throw DimensionError("TabularModel: transition shape");
      for (std::size_t r = 0; r < h; ++r) {
        double s = 0.0;
        for (double x : m->row(r)) {
          if (x < 0.0) throw std::invalid_argument("TabularModel: negative transition entry");
          s += x;
        }
        if (s > 1.0 + 1e-9) throw std::invalid_argument("TabularModel: row sum above 1");
      }
    }
    if (cumulant[j].size() != h) throw DimensionError("TabularModel: cumulant size");
  }
  for (const auto& e : edges) {
    if (e.from >= n || e.to >= n) throw std::invalid_argument("TabularModel: edge out of range");
    if (!std::isfinite(e.weight)) throw std::invalid_argument("TabularModel: edge weight not finite");
  }
}

NetworkSpec TabularModel::as_spec() const {
  std::vector<GvfQuestion> qs(num_gvfs(), GvfQuestion{FixedStreamPolicy{}, StimulusCumulant{0}, ConstantContinuation{0.0}, ""});
  for (const auto& e : edges) {
    auto* comp = std::get_if<CompositionalCumulant>(&qs[e.from].cumulant);
    if (comp == nullptr) {
      qs[e.from].cumulant = CompositionalCumulant{};
      comp = std::get_if<CompositionalCumulant>(&qs[e.from].cumulant);
    }
    comp->terms.push_back({e.to, e.weight});
  }
  return NetworkSpec(std::move(qs));
}

ValueTable bellman_apply(const TabularModel& model, const ValueTable& v) {
  const std::size_t n = model.num_gvfs();
  const std::size_t h = model.num_states;
  if (v.size() != n * h) throw DimensionError("bellman_apply: value table size");
  auto block = [&](std::size_t j) { return std::span<const double>(v.data() + j * h, h); };
  ValueTable out(n * h, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const Vector pv = matvec(model.p_gamma[j], block(j));
    for (std::size_t s = 0; s < h; ++s) out[j * h + s] = model.cumulant[j][s] + pv[s];
  }
  for (const auto& e : model.edges) {
    const Vector link = matvec(model.p_pi[e.from], block(e.to));
    for (std::size_t s = 0; s < h; ++s) out[e.from * h + s] += e.weight * link[s];
  }
  return out;
}

FixedPointResult fixed_point_iterate(const TabularModel& model, const ValueTable& v0, double tol,
                                     std::size_t max_iter, double divergence_bound) {
  if (!(tol > 0.0)) throw std::invalid_argument("fixed_point_iterate: tol must be positive");
  FixedPointResult r;
  r.value = v0;
  r.norms.push_back(norm_inf(r.value));
  for (std::size_t it = 0; it < max_iter; ++it) {
    ValueTable next = bellman_apply(model, r.value);
    double change = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) change = std::max(change, std::abs(next[i] - r.value[i]));
    r.value = std::move(next);
    r.iterations = it + 1;
    const double nrm = norm_inf(r.value);
    r.norms.push_back(nrm);
    if (!std::isfinite(nrm) || nrm > divergence_bound) {
      r.diverged = true;
      return r;
    }
    if (change < tol) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

ValueTable direct_solve(const TabularModel& model) {
  const std::size_t n = model.num_gvfs();
  const std::size_t h = model.num_states;
  const auto order = topological_order(model.as_spec());
  ValueTable v(n * h, 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t j = *it;
    Vector rhs = model.cumulant[j];
    for (const auto& e : model.edges) {
      if (e.from != j) continue;
      const Vector link = matvec(model.p_pi[j], std::span<const double>(v.data() + e.to * h, h));
      axpy(e.weight, link, rhs);
    }
    Matrix a = Matrix::identity(h);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < h; ++c) a(r, c) -= model.p_gamma[j](r, c);
    const Vector x = solve_linear(std::move(a), std::move(rhs));
    std::copy(x.begin(), x.end(), v.begin() + static_cast<std::ptrdiff_t>(j * h));
  }
  return v;
}

TabularModel counterexample_model() {
  TabularModel m;
  m.num_states = 2;
  const Matrix p{{0.9, 0.1}, {0.1, 0.9}};
  for (int j = 0; j < 2; ++j) {
    m.p_pi.push_back(p);
    m.p_gamma.push_back(scaled(p, 0.95));
    m.cumulant.push_back(Vector{0.0, 0.0});
  }
  m.edges = {{0, 1, 1.0}, {1, 0, 1.0}};
  m.d = {0.5, 0.5};
  return m;
}

Vector contraction_coefficients(const TabularModel& model) {
  Vector beta;
  for (const auto& p : model.p_gamma) beta.push_back(spectral_norm(p));
  return beta;
}

TabularModel random_acyclic_model(Rng& rng, std::size_t max_states, std::size_t max_gvfs, double max_beta) {
  if (max_states == 0 || max_gvfs == 0) throw std::invalid_argument("random_acyclic_model: empty bounds");
  std::uniform_int_distribution<std::size_t> hs(1, max_states), ns(1, max_gvfs);
  std::uniform_real_distribution<double> u01(0.0, 1.0), usym(-1.0, 1.0);
  TabularModel m;
  m.num_states = hs(rng);
  const std::size_t h = m.num_states;
  const std::size_t n = ns(rng);
  for (std::size_t j = 0; j < n; ++j) {
    Matrix p(h, h);
    for (std::size_t r = 0; r < h; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < h; ++c) {
        p(r, c) = -std::log(1.0 - u01(rng));
        s += p(r, c);
      }
      for (std::size_t c = 0; c < h; ++c) p(r, c) /= s;
    }
    Vector gamma(h);
    for (double& g : gamma) g = u01(rng);
    Matrix pg(h, h);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < h; ++c) pg(r, c) = p(r, c) * gamma[c];
    const double beta = spectral_norm(pg);
    if (beta > max_beta) pg = scaled(pg, max_beta / beta);
    m.p_pi.push_back(std::move(p));
    m.p_gamma.push_back(std::move(pg));
    Vector c(h);
    for (double& x : c) x = usym(rng);
    m.cumulant.push_back(std::move(c));
  }
  // Links only point to higher indices, so index order is already topological.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j + 1; i < n; ++i) {
      if (u01(rng) < 0.5) m.edges.push_back({j, i, usym(rng)});
    }
  }
  m.d.assign(h, 1.0 / static_cast<double>(h));
  return m;
}

TabularCheckReport run_tabular_check(std::uint64_t seed, std::size_t models) {
  TabularCheckReport rep;
  Rng rng(seed);
  for (std::size_t k = 0; k < models; ++k) {
    const TabularModel m = random_acyclic_model(rng, 8, 5, 0.9);
    const auto r = fixed_point_iterate(m, ValueTable(m.num_gvfs() * m.num_states, 0.0), 1e-13, 100000);
    ++rep.models;
    if (r.diverged) ++rep.diverged;
    if (r.converged) {
      ++rep.converged;
      const ValueTable exact = direct_solve(m);
      for (std::size_t i = 0; i < exact.size(); ++i) {
        rep.max_error = std::max(rep.max_error, std::abs(exact[i] - r.value[i]));
      }
    }
  }
  const auto ce = fixed_point_iterate(counterexample_model(), ValueTable(4, 1.0), 1e-12, 10000);
  rep.counterexample_diverged = ce.diverged;
  rep.counterexample_iterations = ce.iterations;
  const std::size_t last = ce.norms.size() - 1;
  if (last >= 1) rep.counterexample_ratio = ce.norms[last] / ce.norms[last - 1];
  return rep;
}

}  // namespace gvfn
