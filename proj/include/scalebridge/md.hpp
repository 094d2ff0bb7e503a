#pragma once

// Desk-scale Lennard-Jones molecular dynamics in reduced units, plus the
// velocity-autocorrelation / Green-Kubo and Einstein-MSD diffusion estimators.

#include <array>
#include <ostream>

#include "scalebridge/core.hpp"

namespace scalebridge {

class IntegrationBlowup : public Error {
public:
  using Error::Error;
};

struct MdConfig {
  std::size_t n_particles = 108;
  double density = 0.8;      // rho*
  double temperature = 1.0;  // T*
  double dt = 0.004;         // reduced time
  std::size_t n_equil = 2000;
  std::size_t n_prod = 10000;
  double cutoff = 2.5;       // sigma units; 0 switches interactions off
  std::size_t stride = 2;    // steps between stored frames
  std::size_t thermostat_interval = 10;
  std::uint64_t seed = 1;

  double box_length() const { return std::cbrt(static_cast<double>(n_particles) / density); }

  void validate() const {
    if (n_particles < 32) throw ArgumentError("MdConfig: n_particles must be >= 32");
    if (!(density > 0.0)) throw ArgumentError("MdConfig: density must be positive");
    if (!(temperature > 0.0)) throw ArgumentError("MdConfig: temperature must be positive");
    if (!(dt > 0.0 && dt <= 0.005)) throw ArgumentError("MdConfig: dt must lie in (0, 0.005]");
    if (cutoff < 0.0 || cutoff > 0.5 * box_length())
      throw ArgumentError("MdConfig: cutoff must lie in [0, L/2]");
    if (stride == 0 || n_prod < stride) throw ArgumentError("MdConfig: need n_prod >= stride >= 1");
    if (thermostat_interval == 0) throw ArgumentError("MdConfig: thermostat_interval must be >= 1");
  }
};

struct Frame {
  std::vector<double> positions;   // unwrapped, 3N
  std::vector<double> velocities;  // 3N
};

struct Trajectory {
  std::size_t n_particles = 0;
  double dt_frame = 0.0;
  double box_length = 0.0;
  std::vector<Frame> frames;
  // Diagnostics recorded with each frame.
  std::vector<double> total_energy;
  std::vector<double> momentum;  // |sum_i v_i| (unit mass)
  double initial_energy = 0.0;   // at the start of production

  std::size_t frame_count() const noexcept { return frames.size(); }
  bool has_positions() const { return !frames.empty() && !frames.front().positions.empty(); }

  double max_energy_drift() const {
    double worst = 0.0;
    for (double e : total_energy) worst = std::max(worst, std::abs(e - initial_energy));
    return worst / std::abs(initial_energy);
  }
  double max_momentum() const {
    double worst = 0.0;
    for (double p : momentum) worst = std::max(worst, p);
    return worst;
  }
};

namespace detail {

struct LjSystem {
  std::size_t n;
  double box;
  double rc2;
  double shift;  // potential energy shift so U(rc) = 0
  std::vector<double> pos;     // wrapped into the box
  std::vector<double> unwrap;  // unwrapped
  std::vector<double> vel;
  std::vector<double> force;
  double potential = 0.0;

  void compute_forces() {
    std::fill(force.begin(), force.end(), 0.0);
    potential = 0.0;
    if (rc2 <= 0.0) return;
    const double half = 0.5 * box;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double xi = pos[3 * i], yi = pos[3 * i + 1], zi = pos[3 * i + 2];
      double fxi = 0.0, fyi = 0.0, fzi = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double dx = xi - pos[3 * j], dy = yi - pos[3 * j + 1], dz = zi - pos[3 * j + 2];
        if (dx > half) dx -= box; else if (dx < -half) dx += box;
        if (dy > half) dy -= box; else if (dy < -half) dy += box;
        if (dz > half) dz -= box; else if (dz < -half) dz += box;
        const double r2 = dx * dx + dy * dy + dz * dz;
        if (r2 >= rc2) continue;
        const double inv2 = 1.0 / r2;
        const double inv6 = inv2 * inv2 * inv2;
        const double fr = 24.0 * inv6 * (2.0 * inv6 - 1.0) * inv2;  // |F|/r
        potential += 4.0 * inv6 * (inv6 - 1.0) - shift;
        fxi += fr * dx; fyi += fr * dy; fzi += fr * dz;
        force[3 * j] -= fr * dx; force[3 * j + 1] -= fr * dy; force[3 * j + 2] -= fr * dz;
      }
      force[3 * i] += fxi; force[3 * i + 1] += fyi; force[3 * i + 2] += fzi;
    }
  }

  double kinetic() const {
    double k = 0.0;
    for (double v : vel) k += v * v;
    return 0.5 * k;
  }

  double momentum_norm() const {
    double p[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) p[c] += vel[3 * i + c];
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }

  void remove_drift() {
    double p[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) p[c] += vel[3 * i + c];
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) vel[3 * i + c] -= p[c] / static_cast<double>(n);
  }

  double kinetic_temperature() const { return 2.0 * kinetic() / (3.0 * static_cast<double>(n - 1)); }

  void rescale_to(double target) {
    const double t = kinetic_temperature();
    if (t <= 0.0) return;
    const double s = std::sqrt(target / t);
    for (double& v : vel) v *= s;
  }

  void verlet_step(double dt) {
    for (std::size_t k = 0; k < 3 * n; ++k) vel[k] += 0.5 * dt * force[k];
    for (std::size_t k = 0; k < 3 * n; ++k) {
      const double d = dt * vel[k];
      unwrap[k] += d;
      double p = pos[k] + d;
      p -= box * std::floor(p / box);
      pos[k] = p;
    }
    compute_forces();
    for (std::size_t k = 0; k < 3 * n; ++k) vel[k] += 0.5 * dt * force[k];
  }
};

/// FCC sites for n particles in a cubic box, optionally jittered.
inline std::vector<double> fcc_lattice(std::size_t n, double box, double jitter, Rng& rng) {
  std::size_t cells = 1;
  while (4 * cells * cells * cells < n) ++cells;
  const double a = box / static_cast<double>(cells);
  static constexpr double basis[4][3] = {{0.25, 0.25, 0.25}, {0.75, 0.75, 0.25}, {0.75, 0.25, 0.75}, {0.25, 0.75, 0.75}};
  std::vector<double> pos;
  pos.reserve(3 * n);
  for (std::size_t ix = 0; ix < cells && pos.size() < 3 * n; ++ix)
    for (std::size_t iy = 0; iy < cells && pos.size() < 3 * n; ++iy)
      for (std::size_t iz = 0; iz < cells && pos.size() < 3 * n; ++iz)
        for (const auto& b : basis) {
          if (pos.size() >= 3 * n) break;
          pos.push_back((static_cast<double>(ix) + b[0]) * a + jitter * a * (uniform01(rng) - 0.5));
          pos.push_back((static_cast<double>(iy) + b[1]) * a + jitter * a * (uniform01(rng) - 0.5));
          pos.push_back((static_cast<double>(iz) + b[2]) * a + jitter * a * (uniform01(rng) - 0.5));
        }
  return pos;
}

inline double min_pair_distance(const std::vector<double>& pos, double box) {
  const std::size_t n = pos.size() / 3;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        double d = pos[3 * i + c] - pos[3 * j + c];
        d -= box * std::round(d / box);
        r2 += d * d;
      }
      best = std::min(best, r2);
    }
  return std::sqrt(best);
}

}  // namespace detail

/// Thermostatted equilibration (velocity rescaling) followed by NVE velocity-Verlet production.
inline Trajectory lj_md_run(const MdConfig& cfg) {
  cfg.validate();
  detail::LjSystem sys;
  sys.n = cfg.n_particles;
  sys.box = cfg.box_length();
  sys.rc2 = cfg.cutoff * cfg.cutoff;
  if (cfg.cutoff > 0.0) {
    const double inv6 = 1.0 / std::pow(cfg.cutoff, 6);
    sys.shift = 4.0 * inv6 * (inv6 - 1.0);
  } else {
    sys.shift = 0.0;
  }

  Rng rng(cfg.seed);
  // Overlapping starts are retried with a fresh, smaller lattice jitter.
  constexpr double overlap = 0.8;
  double jitter = 0.05;
  bool placed = false;
  for (int attempt = 0; attempt < 5 && !placed; ++attempt, jitter *= 0.5) {
    sys.pos = detail::fcc_lattice(sys.n, sys.box, jitter, rng);
    placed = detail::min_pair_distance(sys.pos, sys.box) >= overlap || cfg.cutoff == 0.0;
  }
  if (!placed) throw ArgumentError("lj_md_run: cannot place particles without overlap at this density");
  for (double& p : sys.pos) p -= sys.box * std::floor(p / sys.box);
  sys.unwrap = sys.pos;

  sys.vel.resize(3 * sys.n);
  for (double& v : sys.vel) v = standard_normal(rng);
  sys.remove_drift();
  sys.rescale_to(cfg.temperature);
  sys.force.assign(3 * sys.n, 0.0);
  sys.compute_forces();

  for (std::size_t step = 1; step <= cfg.n_equil; ++step) {
    sys.verlet_step(cfg.dt);
    if (step % cfg.thermostat_interval == 0) sys.rescale_to(cfg.temperature);
  }

  Trajectory traj;
  traj.n_particles = sys.n;
  traj.dt_frame = cfg.dt * static_cast<double>(cfg.stride);
  traj.box_length = sys.box;
  traj.initial_energy = sys.kinetic() + sys.potential;
  const std::size_t n_frames = cfg.n_prod / cfg.stride;
  traj.frames.reserve(n_frames);
  // Production displacements start from zero.
  sys.unwrap = sys.pos;
  const double e0 = traj.initial_energy;
  for (std::size_t step = 1; traj.frames.size() < n_frames; ++step) {
    sys.verlet_step(cfg.dt);
    if (step % cfg.stride != 0) continue;
    const double e = sys.kinetic() + sys.potential;
    if (!std::isfinite(e) || std::abs(e - e0) > 0.5 * std::abs(e0) + 10.0 * static_cast<double>(sys.n))
      throw IntegrationBlowup("lj_md_run: energy diverged at production step " + std::to_string(step));
    traj.frames.push_back(Frame{sys.unwrap, sys.vel});
    traj.total_energy.push_back(e);
    traj.momentum.push_back(sys.momentum_norm());
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Estimators

struct VacfSeries {
  std::vector<double> c;  // <v(0).v(t)>
  double dt = 1.0;        // lag spacing
  int dims = 3;
};

/// Average over particles and time origins of v(t0).v(t0 + t), t = 0..max_lag.
inline VacfSeries vacf(const Trajectory& traj, std::size_t max_lag) {
  const std::size_t nf = traj.frame_count();
  if (max_lag >= nf) throw ArgumentError("vacf: max_lag must be smaller than the frame count");
  const std::size_t m = traj.frames.front().velocities.size();
  const int dims = static_cast<int>(m / traj.n_particles);
  VacfSeries out;
  out.dt = traj.dt_frame;
  out.dims = dims;
  out.c.assign(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t0 = 0; t0 + lag < nf; ++t0) {
      const auto& a = traj.frames[t0].velocities;
      const auto& b = traj.frames[t0 + lag].velocities;
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += a[k] * b[k];
      acc += s;
    }
    out.c[lag] = acc / (static_cast<double>(nf - lag) * static_cast<double>(traj.n_particles));
  }
  return out;
}

struct GreenKuboResult {
  double integral = 0.0;  // (1/dims) * trapezoid over the whole series; may be negative
  double plateau = 0.0;   // running integral averaged over the final 20% of lags
  std::vector<double> running;
};

inline GreenKuboResult green_kubo_diffusion(const VacfSeries& s) {
  if (s.c.size() < 2) throw ArgumentError("green_kubo_diffusion: need at least 2 lags");
  const double inv_dims = 1.0 / static_cast<double>(s.dims);
  GreenKuboResult r;
  r.running.assign(s.c.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 1; k < s.c.size(); ++k) {
    acc += 0.5 * s.dt * (s.c[k - 1] + s.c[k]);
    r.running[k] = acc * inv_dims;
  }
  r.integral = r.running.back();
  const std::size_t len = s.c.size();
  const std::size_t first = std::min(len - 1, static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(len))));
  double sum = 0.0;
  for (std::size_t k = first; k < len; ++k) sum += r.running[k];
  r.plateau = sum / static_cast<double>(len - first);
  return r;
}

enum class MsdRegime { Diffusive, Ballistic, Frozen };

struct EinsteinResult {
  double diffusion = 0.0;
  double exponent = 0.0;  // log-log slope of MSD over the fit window
  MsdRegime regime = MsdRegime::Diffusive;
  std::vector<double> msd;  // by lag, msd[0] = 0
};

/// D = slope(MSD)/(2 dims), fit over the last half of lags 1..max_lag.
inline EinsteinResult einstein_msd_diffusion(const Trajectory& traj, std::size_t max_lag,
                                             std::size_t origin_stride = 1) {
  if (!traj.has_positions()) throw ArgumentError("einstein_msd_diffusion: trajectory has no positions");
  const std::size_t nf = traj.frame_count();
  if (max_lag < 2 || max_lag >= nf) throw ArgumentError("einstein_msd_diffusion: need 2 <= max_lag < frames");
  if (origin_stride == 0) throw ArgumentError("einstein_msd_diffusion: origin_stride must be >= 1");
  const std::size_t m = traj.frames.front().positions.size();
  const double dims = static_cast<double>(m / traj.n_particles);
  EinsteinResult r;
  r.msd.assign(max_lag + 1, 0.0);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t t0 = 0; t0 + lag < nf; t0 += origin_stride) {
      const auto& a = traj.frames[t0].positions;
      const auto& b = traj.frames[t0 + lag].positions;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = b[k] - a[k];
        acc += d * d;
      }
      ++count;
    }
    r.msd[lag] = acc / (static_cast<double>(count) * static_cast<double>(traj.n_particles));
  }
  // Least squares over lags in [max_lag/2, max_lag].
  const std::size_t lo = std::max<std::size_t>(1, max_lag / 2);
  double st = 0, sy = 0, stt = 0, sty = 0, cnt = 0;
  for (std::size_t k = lo; k <= max_lag; ++k) {
    const double t = static_cast<double>(k) * traj.dt_frame;
    st += t; sy += r.msd[k]; stt += t * t; sty += t * r.msd[k]; cnt += 1.0;
  }
  const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
  r.diffusion = slope / (2.0 * dims);
  if (r.msd[max_lag] == 0.0) {
    r.regime = MsdRegime::Frozen;
    r.diffusion = 0.0;
    r.exponent = 0.0;
    return r;
  }
  r.exponent = std::log(r.msd[max_lag] / r.msd[lo]) /
               std::log(static_cast<double>(max_lag) / static_cast<double>(lo));
  r.regime = r.exponent > 1.5 ? MsdRegime::Ballistic : MsdRegime::Diffusive;
  return r;
}

/// Ornstein-Uhlenbeck velocities (exact discretization) for n_particles in 3-D.
/// Known answer: D = kT/(m gamma). Positions are integrated for completeness.
inline Trajectory ou_velocity_series(double gamma, double kt_over_m, double dt, std::size_t n,
                                     std::uint64_t seed, std::size_t n_particles = 1) {
  if (!(gamma > 0.0) || !(kt_over_m > 0.0) || !(dt > 0.0))
    throw ArgumentError("ou_velocity_series: gamma, kT/m and dt must be positive");
  if (!(gamma * dt < 0.1)) throw ArgumentError("ou_velocity_series: requires gamma*dt < 0.1");
  if (n < 2 || n_particles == 0) throw ArgumentError("ou_velocity_series: need n >= 2 and particles >= 1");
  const double a = std::exp(-gamma * dt);
  const double b = std::sqrt(kt_over_m * (1.0 - a * a));
  const double sd = std::sqrt(kt_over_m);
  Rng rng(seed);
  Trajectory traj;
  traj.n_particles = n_particles;
  traj.dt_frame = dt;
  traj.frames.reserve(n);
  std::vector<double> v(3 * n_particles), x(3 * n_particles, 0.0);
  for (double& vi : v) vi = sd * standard_normal(rng);
  traj.frames.push_back(Frame{x, v});
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double vn = a * v[i] + b * standard_normal(rng);
      x[i] += 0.5 * dt * (v[i] + vn);
      v[i] = vn;
    }
    traj.frames.push_back(Frame{x, v});
  }
  return traj;
}

/// XYZ-like dump: particle count, a comment line, then "LJ x y z vx vy vz" rows per frame.
inline void write_xyz(std::ostream& os, const Trajectory& traj) {
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    const auto& fr = traj.frames[f];
    os << traj.n_particles << "\nframe=" << f << " t=" << format_double(static_cast<double>(f + 1) * traj.dt_frame)
       << " box=" << format_double(traj.box_length) << '\n';
    for (std::size_t i = 0; i < traj.n_particles; ++i) {
      os << "LJ";
      for (int c = 0; c < 3; ++c) os << ' ' << format_double(fr.positions.empty() ? 0.0 : fr.positions[3 * i + c]);
      for (int c = 0; c < 3; ++c) os << ' ' << format_double(fr.velocities[3 * i + c]);
      os << '\n';
    }
  }
}

}  // namespace scalebridge
