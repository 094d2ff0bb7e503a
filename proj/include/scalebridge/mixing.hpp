#pragma once

// 1-D two-species interdiffusion on a uniform finite-volume grid. Both species
// diffuse with the per-cell mutual coefficient; fluxes use face-averaged D and
// the boundaries are closed.

#include <numeric>

#include "scalebridge/core.hpp"

namespace scalebridge {

class StepSizeError : public Error {
public:
  StepSizeError(double dt, double dt_max)
      : Error("coarse_step: dt " + std::to_string(dt) + " exceeds stability limit " + std::to_string(dt_max)),
        dt_max_(dt_max) {}
  double dt_max() const noexcept { return dt_max_; }

private:
  double dt_max_;
};

struct MixingState {
  double dx = 1.0;
  std::vector<double> n1, n2, temperature;
  double z1 = 1.0, z2 = 18.0;
  double t = 0.0;
  std::int64_t step = 0;

  std::size_t cells() const noexcept { return n1.size(); }

  void validate() const {
    if (n1.size() < 8) throw ArgumentError("MixingState: need at least 8 cells");
    if (n2.size() != n1.size() || temperature.size() != n1.size())
      throw ArgumentError("MixingState: field sizes differ");
    if (!(dx > 0.0)) throw ArgumentError("MixingState: dx must be > 0");
    for (std::size_t i = 0; i < n1.size(); ++i)
      if (!(n1[i] >= 0.0 && n2[i] >= 0.0)) throw ArgumentError("MixingState: densities must be >= 0");
  }

  /// Closure input (n1, n2, T, Z1, Z2) for one cell.
  std::vector<double> closure_input(std::size_t i) const { return {n1[i], n2[i], temperature[i], z1, z2}; }

  double total_n1() const { return dx * std::accumulate(n1.begin(), n1.end(), 0.0); }
  double total_n2() const { return dx * std::accumulate(n2.begin(), n2.end(), 0.0); }
  bool operator==(const MixingState&) const = default;
};

/// Left half (n1l, n2l), right half (n1r, n2r), uniform temperature.
inline MixingState interface_state(std::size_t cells, double dx, double n1l, double n2l, double n1r, double n2r,
                                   double temperature, double z1 = 1.0, double z2 = 18.0) {
  MixingState s;
  s.dx = dx;
  s.z1 = z1;
  s.z2 = z2;
  s.n1.resize(cells);
  s.n2.resize(cells);
  s.temperature.assign(cells, temperature);
  for (std::size_t i = 0; i < cells; ++i) {
    const bool left = i < cells / 2;
    s.n1[i] = left ? n1l : n1r;
    s.n2[i] = left ? n2l : n2r;
  }
  s.validate();
  return s;
}

inline double stable_dt(double dx, std::span<const double> d_field) {
  double dmax = 0.0;
  for (double d : d_field) dmax = std::max(dmax, d);
  return dmax > 0.0 ? 0.4 * dx * dx / dmax : std::numeric_limits<double>::infinity();
}

inline MixingState coarse_step(const MixingState& s, std::span<const double> d_field, double dt) {
  const std::size_t m = s.cells();
  if (d_field.size() != m) throw ArgumentError("coarse_step: D field size mismatch");
  for (double d : d_field)
    if (!(d >= 0.0) || !std::isfinite(d)) throw ArgumentError("coarse_step: D must be finite and >= 0");
  if (!(dt >= 0.0)) throw ArgumentError("coarse_step: dt must be >= 0");
  const double limit = stable_dt(s.dx, d_field);
  if (dt > limit) throw StepSizeError(dt, limit);

  MixingState out = s;
  const double r = dt / (s.dx * s.dx);
  auto advance = [&](const std::vector<double>& n, std::vector<double>& next) {
    // flux[i] is the transfer from cell i to cell i+1.
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double face_d = 0.5 * (d_field[i] + d_field[i + 1]);
      const double flux = r * face_d * (n[i] - n[i + 1]);
      next[i] -= flux;
      next[i + 1] += flux;
    }
    for (double& v : next) v = std::max(v, 0.0);
  };
  advance(s.n1, out.n1);
  advance(s.n2, out.n2);
  out.t += dt;
  out.step += 1;
  return out;
}

}  // namespace scalebridge
