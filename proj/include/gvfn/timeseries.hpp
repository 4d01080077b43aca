#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gvfn/numerics.hpp"

namespace gvfn {

enum class SeriesKind { kMackeyGlass, kMso };

SeriesKind parse_series_kind(const std::string& name);
std::string to_string(SeriesKind kind);

struct SeriesConfig {
  SeriesKind kind = SeriesKind::kMackeyGlass;
  std::size_t length = 600000;
  // Mackey-Glass
  double tau = 17.0;
  double alpha = 0.2;
  double beta = 0.1;
  double dt = 0.1;
  double y0 = 1.2;
  bool rk4 = false;
  // Integration steps dropped before the first sample.
  std::size_t burn_in = 0;
  // Keep every stride-th integration step.
  std::size_t stride = 1;
  std::size_t horizon = 12;

  void validate() const;
};

/// Samples y(0), y(dt), ... of dy/dt = alpha y(t-tau) / (1 + y(t-tau)^10) - beta y(t) with a
/// constant history y0 on [-tau, 0].
Vector mackey_glass(const SeriesConfig& cfg);

/// y(t) = sin(0.2t) + sin(0.311t) + sin(0.42t) + sin(0.51t) for t = 0, 1, ...
Vector mso(const SeriesConfig& cfg);

Vector generate_series(const SeriesConfig& cfg);

struct HorizonPair {
  double observation = 0.0;
  double target = 0.0;
};

/// (series[t], series[t + h]) for every t with a target.
std::vector<HorizonPair> horizon_targets(std::span<const double> series, std::size_t h);

void write_series_csv(std::ostream& os, std::span<const double> series);

}  // namespace gvfn
