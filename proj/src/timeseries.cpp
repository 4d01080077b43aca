#include "gvfn/timeseries.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace gvfn {

SeriesKind parse_series_kind(const std::string& name) {
  if (name == "mg" || name == "mackey-glass") return SeriesKind::kMackeyGlass;
  if (name == "mso") return SeriesKind::kMso;
  throw std::invalid_argument("unknown series kind: " + name);
}

std::string to_string(SeriesKind kind) { return kind == SeriesKind::kMackeyGlass ? "mackey-glass" : "mso"; }

void SeriesConfig::validate() const {
  if (length <= horizon) throw std::invalid_argument("SeriesConfig: length must exceed horizon");
  if (stride == 0) throw std::invalid_argument("SeriesConfig: stride must be positive");
  if (kind == SeriesKind::kMackeyGlass) {
    if (!(dt > 0.0)) throw std::invalid_argument("SeriesConfig: dt must be positive");
    const double lag = tau / dt;
    if (tau < 0.0 || std::abs(lag - std::round(lag)) > 1e-9) {
      throw std::invalid_argument("SeriesConfig: tau/dt must be a non-negative integer");
    }
  }
}

namespace {

double mg_rate(const SeriesConfig& c, double y, double delayed) {
  return c.alpha * delayed / (1.0 + std::pow(delayed, 10.0)) - c.beta * y;
}

}  // namespace

Vector mackey_glass(const SeriesConfig& cfg) {
  cfg.validate();
  const auto lag = static_cast<std::size_t>(std::llround(cfg.tau / cfg.dt));
  const std::size_t total = cfg.burn_in + (cfg.length - 1) * cfg.stride + 1;
  Vector y(total);
  y[0] = cfg.y0;
  auto delayed = [&](std::size_t k) { return k >= lag ? y[k - lag] : cfg.y0; };
  for (std::size_t k = 0; k + 1 < total; ++k) {
    const double d0 = delayed(k);
    if (!cfg.rk4) {
      y[k + 1] = y[k] + cfg.dt * mg_rate(cfg, y[k], d0);
    } else {
      // Delayed values at the half step are linearly interpolated on the sample grid.
      const double d1 = delayed(k + 1);
      const double dh = 0.5 * (d0 + d1);
      const double k1 = mg_rate(cfg, y[k], d0);
      const double k2 = mg_rate(cfg, y[k] + 0.5 * cfg.dt * k1, dh);
      const double k3 = mg_rate(cfg, y[k] + 0.5 * cfg.dt * k2, dh);
      const double k4 = mg_rate(cfg, y[k] + cfg.dt * k3, d1);
      y[k + 1] = y[k] + cfg.dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    if (!std::isfinite(y[k + 1])) throw NumericError("mackey_glass: non-finite value", k + 1);
  }
  Vector out(cfg.length);
  for (std::size_t i = 0; i < cfg.length; ++i) out[i] = y[cfg.burn_in + i * cfg.stride];
  return out;
}

Vector mso(const SeriesConfig& cfg) {
  cfg.validate();
  Vector out(cfg.length);
  for (std::size_t i = 0; i < cfg.length; ++i) {
    const double t = static_cast<double>(cfg.burn_in + i * cfg.stride);
    out[i] = std::sin(0.2 * t) + std::sin(0.311 * t) + std::sin(0.42 * t) + std::sin(0.51 * t);
  }
  return out;
}

Vector generate_series(const SeriesConfig& cfg) {
  return cfg.kind == SeriesKind::kMackeyGlass ? mackey_glass(cfg) : mso(cfg);
}

std::vector<HorizonPair> horizon_targets(std::span<const double> series, std::size_t h) {
  std::vector<HorizonPair> out;
  if (series.size() <= h) return out;
  out.reserve(series.size() - h);
  for (std::size_t t = 0; t + h < series.size(); ++t) out.push_back({series[t], series[t + h]});
  return out;
}

void write_series_csv(std::ostream& os, std::span<const double> series) {
  os.precision(17);
  os << "y\n";
  for (double v : series) os << v << '\n';
}

}  // namespace gvfn
