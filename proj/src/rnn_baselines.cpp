#include "gvfn/rnn_baselines.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace gvfn {

CellKind parse_cell_kind(const std::string& name) {
  if (name == "simple" || name == "rnn") return CellKind::kSimple;
  if (name == "gru") return CellKind::kGru;
  throw std::invalid_argument("unknown cell kind: " + name);
}

std::string to_string(CellKind kind) { return kind == CellKind::kGru ? "gru" : "simple"; }

RnnCell::RnnCell(CellKind kind, std::size_t input_dim, std::size_t hidden)
    : kind_(kind), d_(input_dim), h_(hidden) {
  if (input_dim == 0 || hidden == 0) throw DimensionError("RnnCell: empty input or hidden layer");
  theta_.assign(num_blocks() * h_ * width(), 0.0);
}

void RnnCell::randomize(Rng& rng) {
  const double b = 1.0 / std::sqrt(static_cast<double>(width()));
  std::uniform_real_distribution<double> u(-b, b);
  for (double& v : theta_) v = u(rng);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out[i] = sum_k W_block[i][k] z[k]
void block_matvec(const RnnCell& cell, std::size_t block, std::span<const double> x, std::span<const double> h,
                  Vector& out) {
  const std::size_t d = cell.input_dim(), n = cell.hidden();
  out.assign(n, 0.0);
  const double* th = cell.theta().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = th + cell.index(block, i, 0);
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += row[k] * x[k];
    for (std::size_t k = 0; k < n; ++k) acc += row[d + k] * h[k];
    out[i] = acc;
  }
}

// grad_block += ga (x) [x; h]; returns the h-part of W_block^T ga added into gh.
void block_backward(const RnnCell& cell, std::size_t block, std::span<const double> ga, std::span<const double> x,
                    std::span<const double> h, std::span<double> grad, std::span<double> gh) {
  const std::size_t d = cell.input_dim(), n = cell.hidden();
  const double* th = cell.theta().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = ga[i];
    if (g == 0.0) continue;
    const std::size_t base = cell.index(block, i, 0);
    for (std::size_t k = 0; k < d; ++k) grad[base + k] += g * x[k];
    for (std::size_t k = 0; k < n; ++k) {
      grad[base + d + k] += g * h[k];
      gh[k] += th[base + d + k] * g;
    }
  }
}

}  // namespace

CellCache cell_forward(const RnnCell& cell, std::span<const double> x, std::span<const double> h_prev) {
  if (x.size() != cell.input_dim() || h_prev.size() != cell.hidden()) throw DimensionError("cell_forward: shape");
  const std::size_t n = cell.hidden();
  CellCache c;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());
  if (cell.kind() == CellKind::kSimple) {
    block_matvec(cell, 0, x, h_prev, c.c);
    for (double& v : c.c) v = std::tanh(v);
    c.h_next = c.c;
    return c;
  }
  block_matvec(cell, 0, x, h_prev, c.u);
  block_matvec(cell, 1, x, h_prev, c.r);
  for (double& v : c.u) v = sigmoid(v);
  for (double& v : c.r) v = sigmoid(v);
  Vector rh(n);
  for (std::size_t i = 0; i < n; ++i) rh[i] = c.r[i] * h_prev[i];
  block_matvec(cell, 2, x, rh, c.c);
  c.h_next.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.c[i] = std::tanh(c.c[i]);
    c.h_next[i] = (1.0 - c.u[i]) * c.c[i] + c.u[i] * h_prev[i];
  }
  return c;
}

Vector cell_backward(const RnnCell& cell, const CellCache& cache, std::span<const double> g, std::span<double> grad) {
  const std::size_t n = cell.hidden();
  if (g.size() != n || grad.size() != cell.theta().size()) throw DimensionError("cell_backward: shape");
  Vector gh(n, 0.0);
  if (cell.kind() == CellKind::kSimple) {
    Vector ga(n);
    for (std::size_t i = 0; i < n; ++i) ga[i] = g[i] * (1.0 - cache.c[i] * cache.c[i]);
    block_backward(cell, 0, ga, cache.x, cache.h_prev, grad, gh);
    return gh;
  }
  Vector ga_c(n), ga_u(n), rh(n), g_rh(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = cache.u[i], c = cache.c[i];
    ga_c[i] = g[i] * (1.0 - u) * (1.0 - c * c);
    ga_u[i] = g[i] * (cache.h_prev[i] - c) * u * (1.0 - u);
    gh[i] += g[i] * u;
    rh[i] = cache.r[i] * cache.h_prev[i];
  }
  block_backward(cell, 2, ga_c, cache.x, rh, grad, g_rh);
  Vector ga_r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = cache.r[i];
    ga_r[i] = g_rh[i] * cache.h_prev[i] * r * (1.0 - r);
    gh[i] += g_rh[i] * r;
  }
  block_backward(cell, 0, ga_u, cache.x, cache.h_prev, grad, gh);
  block_backward(cell, 1, ga_r, cache.x, cache.h_prev, grad, gh);
  return gh;
}

void bptt_window(const RnnCell& cell, std::span<const RnnRecord> window, const FinalGradient& g_final,
                 std::span<double> grad) {
  if (window.empty()) throw std::invalid_argument("bptt_window: empty window");
  std::vector<CellCache> caches;
  caches.reserve(window.size());
  Vector h = window.front().h_prev;
  for (const auto& rec : window) {
    caches.push_back(cell_forward(cell, rec.x, h));
    h = caches.back().h_next;
  }
  Vector g = g_final(h);
  for (auto it = caches.rbegin(); it != caches.rend(); ++it) g = cell_backward(cell, *it, g, grad);
}

RnnLearner::RnnLearner(std::size_t input_dim, std::size_t outputs, RnnOptions opts, Rng& rng, NetworkSpec head_spec,
                       NetworkSpec aux_spec)
    : opts_(opts),
      cell_(opts.cell, input_dim, opts.hidden),
      head_(opts.hidden, opts.head_hidden, outputs),
      aux_(aux_spec.size(), opts.hidden + 1),
      head_spec_(std::move(head_spec)),
      aux_spec_(std::move(aux_spec)) {
  if (opts_.truncation == 0) throw std::invalid_argument("RnnLearner: truncation must be positive");
  if (opts_.batch == 0) throw std::invalid_argument("RnnLearner: batch must be positive");
  if (opts_.head_hidden == 0) throw std::invalid_argument("RnnLearner: head needs a hidden layer");
  if (head_spec_.size() != 0 && head_spec_.size() != outputs) {
    throw DimensionError("RnnLearner: head spec size differs from output count");
  }
  cell_.randomize(rng);
  head_.randomize(rng);
  capacity_ = opts_.truncation + std::max<std::size_t>(opts_.delay, 1);
  h_.assign(opts_.hidden, 0.0);
  h_before_ = h_;
  pred_ = head_forward(head_, h_);
  g_cell_.assign(cell_.theta().size(), 0.0);
  g_head_.assign(head_.theta.size(), 0.0);
  g_aux_.assign(aux_.data().size(), 0.0);
  adam_cell_ = AdamState(g_cell_.size());
  adam_head_ = AdamState(g_head_.size());
  adam_aux_ = AdamState(g_aux_.size());
}

const Vector& RnnLearner::advance(std::span<const double> input) {
  RnnRecord rec{Vector(input.begin(), input.end()), h_};
  h_before_ = h_;
  h_ = cell_forward(cell_, rec.x, h_).h_next;
  buffer_.push_back(std::move(rec));
  if (buffer_.size() > capacity_) buffer_.pop_front();
  pred_ = head_forward(head_, h_);
  return pred_;
}

Vector RnnLearner::aux_predictions() const {
  const std::size_t n = opts_.hidden;
  Vector v(aux_.rows(), 0.0);
  for (std::size_t j = 0; j < aux_.rows(); ++j) {
    double acc = aux_(j, n);
    for (std::size_t k = 0; k < n; ++k) acc += aux_(j, k) * h_[k];
    v[j] = acc;
  }
  return v;
}

namespace {

std::span<const RnnRecord> window_of(const std::deque<RnnRecord>& buf, std::vector<RnnRecord>& scratch,
                                     std::size_t p, std::size_t skip_newest) {
  const std::size_t end = buf.size() - skip_newest;
  const std::size_t begin = end > p ? end - p : 0;
  scratch.assign(buf.begin() + static_cast<std::ptrdiff_t>(begin), buf.begin() + static_cast<std::ptrdiff_t>(end));
  return scratch;
}

}  // namespace

bool RnnLearner::add_supervised(std::span<const double> target) {
  if (target.size() != head_.outputs) throw DimensionError("add_supervised: target size");
  if (buffer_.size() < opts_.delay + 1) return false;
  std::vector<RnnRecord> scratch;
  const auto win = window_of(buffer_, scratch, opts_.truncation, opts_.delay);
  bptt_window(
      cell_, win,
      [&](std::span<const double> h) {
        const HeadForward fwd = head_forward_full(head_, h);
        Vector g(head_.outputs);
        for (std::size_t m = 0; m < g.size(); ++m) g[m] = fwd.output[m] - target[m];
        Vector gh(h.size(), 0.0);
        head_backward(head_, h, fwd, g, g_head_, gh);
        return gh;
      },
      g_cell_);
  return true;
}

void RnnLearner::add_td(const Transition& tr, Rng& rng) {
  if (buffer_.size() < 2) return;
  const std::size_t n = opts_.hidden;
  TdTerms head_terms, aux_terms;
  if (head_spec_.size() > 0) {
    head_terms = td_terms(head_spec_, tr, head_forward(head_, h_before_), pred_, &rng);
  }
  if (aux_spec_.size() > 0) {
    Vector before(aux_.rows()), after = aux_predictions();
    for (std::size_t j = 0; j < aux_.rows(); ++j) {
      double acc = aux_(j, n);
      for (std::size_t k = 0; k < n; ++k) acc += aux_(j, k) * h_before_[k];
      before[j] = acc;
    }
    aux_terms = td_terms(aux_spec_, tr, before, after, &rng);
  }
  if (head_spec_.size() == 0 && aux_spec_.size() == 0) return;
  std::vector<RnnRecord> scratch;
  const auto win = window_of(buffer_, scratch, opts_.truncation, 1);
  bptt_window(
      cell_, win,
      [&](std::span<const double> h) {
        Vector gh(n, 0.0);
        if (head_spec_.size() > 0) {
          const HeadForward fwd = head_forward_full(head_, h);
          Vector g(head_.outputs);
          for (std::size_t m = 0; m < g.size(); ++m) g[m] = -head_terms.rho[m] * head_terms.delta[m];
          head_backward(head_, h, fwd, g, g_head_, gh);
        }
        for (std::size_t j = 0; j < aux_.rows(); ++j) {
          const double g = -aux_terms.rho[j] * aux_terms.delta[j];
          if (g == 0.0) continue;
          const std::size_t base = j * (n + 1);
          for (std::size_t k = 0; k < n; ++k) {
            g_aux_[base + k] += g * h[k];
            gh[k] += g * aux_(j, k);
          }
          g_aux_[base + n] += g;
        }
        return gh;
      },
      g_cell_);
}

void RnnLearner::end_step() {
  ++steps_;
  if (++accum_count_ < opts_.batch) return;
  apply();
}

void RnnLearner::apply() {
  const double inv = 1.0 / static_cast<double>(accum_count_);
  double sq = 0.0;
  for (Vector* g : {&g_cell_, &g_head_, &g_aux_}) {
    for (double& x : *g) {
      x *= inv;
      sq += x * x;
    }
  }
  if (opts_.clip_norm > 0.0 && std::sqrt(sq) > opts_.clip_norm) {
    const double s = opts_.clip_norm / std::sqrt(sq);
    for (Vector* g : {&g_cell_, &g_head_, &g_aux_})
      for (double& x : *g) x *= s;
  }
  auto step = [&](AdamState& st, std::span<double> params, std::span<const double> g) {
    if (opts_.optimizer == OptimizerKind::kAdam) {
      adam_step(st, params, g, opts_.alpha);
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= opts_.alpha * g[i];
    }
  };
  step(adam_cell_, cell_.theta(), g_cell_);
  step(adam_head_, head_.theta, g_head_);
  if (!g_aux_.empty()) step(adam_aux_, aux_.data(), g_aux_);
  for (Vector* g : {&g_cell_, &g_head_, &g_aux_}) std::fill(g->begin(), g->end(), 0.0);
  accum_count_ = 0;
  require_finite(cell_.theta(), "rnn cell parameters");
  require_finite(head_.theta, "rnn head parameters");
}

void RnnLearner::save(std::ostream& os) const {
  write_array(os, "cell", cell_.theta());
  write_array(os, "head", head_.theta);
  write_array(os, "aux", aux_.data());
  write_array(os, "hidden", h_);
  write_array(os, "hidden_before", h_before_);
  for (const AdamState* st : {&adam_cell_, &adam_head_, &adam_aux_}) {
    write_array(os, "adam_m", st->m);
    write_array(os, "adam_v", st->v);
  }
  write_array(os, "grad_cell", g_cell_);
  write_array(os, "grad_head", g_head_);
  write_array(os, "grad_aux", g_aux_);
  const Vector counters{static_cast<double>(adam_cell_.t), static_cast<double>(accum_count_),
                        static_cast<double>(steps_), static_cast<double>(buffer_.size())};
  write_array(os, "counters", counters);
  for (const auto& rec : buffer_) {
    write_array(os, "rec_x", rec.x);
    write_array(os, "rec_h", rec.h_prev);
  }
}

void RnnLearner::load(std::istream& is) {
  auto read_sized = [&](const char* tag, std::size_t n) {
    Vector v = read_array(is, tag);
    if (v.size() != n) throw std::runtime_error(std::string("checkpoint: size mismatch in ") + tag);
    return v;
  };
  Vector cell = read_sized("cell", cell_.theta().size());
  Vector head = read_sized("head", head_.theta.size());
  Vector aux = read_sized("aux", aux_.data().size());
  Vector h = read_sized("hidden", opts_.hidden);
  Vector hb = read_sized("hidden_before", opts_.hidden);
  AdamState states[3] = {adam_cell_, adam_head_, adam_aux_};
  for (AdamState& st : states) {
    st.m = read_sized("adam_m", st.m.size());
    st.v = read_sized("adam_v", st.v.size());
  }
  Vector gc = read_sized("grad_cell", g_cell_.size());
  Vector gh = read_sized("grad_head", g_head_.size());
  Vector ga = read_sized("grad_aux", g_aux_.size());
  const Vector counters = read_sized("counters", 4);
  std::deque<RnnRecord> buf;
  for (std::size_t r = 0; r < static_cast<std::size_t>(counters[3]); ++r) {
    RnnRecord rec;
    rec.x = read_sized("rec_x", cell_.input_dim());
    rec.h_prev = read_sized("rec_h", opts_.hidden);
    buf.push_back(std::move(rec));
  }
  cell_.theta() = std::move(cell);
  head_.theta = std::move(head);
  std::copy(aux.begin(), aux.end(), aux_.data().begin());
  h_ = std::move(h);
  h_before_ = std::move(hb);
  for (AdamState& st : states) st.t = static_cast<std::uint64_t>(counters[0]);
  adam_cell_ = std::move(states[0]);
  adam_head_ = std::move(states[1]);
  adam_aux_ = std::move(states[2]);
  g_cell_ = std::move(gc);
  g_head_ = std::move(gh);
  g_aux_ = std::move(ga);
  accum_count_ = static_cast<std::size_t>(counters[1]);
  steps_ = static_cast<std::uint64_t>(counters[2]);
  buffer_ = std::move(buf);
  pred_ = head_forward(head_, h_);
}

}  // namespace gvfn
