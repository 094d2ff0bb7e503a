#pragma once

// Thin-plate radial basis function interpolant with a linear polynomial tail.
// Inputs are expected in the normalized unit cube.

#include <Eigen/Dense>

#include "scalebridge/core.hpp"

namespace scalebridge {

class FitError : public Error {
public:
  using Error::Error;
};

/// phi(r) = r^2 ln r, phi(0) = 0. Takes r^2 to skip a square root.
inline double thin_plate(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

struct RbfSurrogate {
  std::size_t dims = 0;
  std::vector<double> centers;  // row-major, n_centers x dims
  std::vector<double> weights;
  std::vector<double> poly;     // c0 + sum_i c_{i+1} x_i
  double lambda = 0.0;
  double fit_residual = 0.0;    // relative residual of the augmented solve

  std::size_t n_centers() const { return weights.size(); }
  std::span<const double> center(std::size_t i) const { return {centers.data() + i * dims, dims}; }

  bool operator==(const RbfSurrogate&) const = default;
};

/// Solves [Phi + lambda I, P; P^T, 0][w; c] = [y; 0].
inline RbfSurrogate rbf_fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
                            double lambda) {
  const std::size_t n = x.size();
  if (n == 0) throw ArgumentError("rbf_fit: no points");
  const std::size_t d = x.front().size();
  if (y.size() != n) throw ArgumentError("rbf_fit: target count does not match point count");
  if (lambda < 0.0) throw ArgumentError("rbf_fit: lambda must be >= 0");
  if (n < d + 2) throw ArgumentError("rbf_fit: need at least d+2 points for the polynomial tail");
  for (const auto& xi : x)
    if (xi.size() != d) throw ArgumentError("rbf_fit: ragged inputs");

  if (lambda == 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (squared_distance(x[i], x[j]) == 0.0)
          throw FitError("rbf_fit: duplicate points make the system singular; deduplicate or use lambda > 0");
  }

  const auto m = static_cast<Eigen::Index>(n + d + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    a(ii, ii) = lambda;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = thin_plate(squared_distance(x[i], x[j]));
      a(ii, static_cast<Eigen::Index>(j)) = v;
      a(static_cast<Eigen::Index>(j), ii) = v;
    }
    const auto base = static_cast<Eigen::Index>(n);
    a(ii, base) = 1.0;
    a(base, ii) = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      a(ii, base + 1 + static_cast<Eigen::Index>(k)) = x[i][k];
      a(base + 1 + static_cast<Eigen::Index>(k), ii) = x[i][k];
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = y[i];

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd sol = lu.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  const double residual = (a * sol - rhs).norm() / scale;
  if (!sol.allFinite() || !(residual < 1e-8))
    throw FitError("rbf_fit: augmented system is singular or ill-conditioned (residual " +
                   std::to_string(residual) + "); deduplicate points or use lambda > 0");

  RbfSurrogate s;
  s.dims = d;
  s.lambda = lambda;
  s.fit_residual = residual;
  s.centers.reserve(n * d);
  for (const auto& xi : x) s.centers.insert(s.centers.end(), xi.begin(), xi.end());
  s.weights.assign(sol.data(), sol.data() + n);
  s.poly.assign(sol.data() + n, sol.data() + m);
  return s;
}

inline double rbf_predict(const RbfSurrogate& s, std::span<const double> x) {
  double v = s.poly[0];
  for (std::size_t k = 0; k < s.dims; ++k) v += s.poly[k + 1] * x[k];
  for (std::size_t i = 0; i < s.n_centers(); ++i) v += s.weights[i] * thin_plate(squared_distance(x, s.center(i)));
  return v;
}

inline double nearest_center_distance(const RbfSurrogate& s, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.n_centers(); ++i) best = std::min(best, squared_distance(x, s.center(i)));
  return std::sqrt(best);
}

/// True when x is farther from every center than the unit-cube diameter, where r^2 ln r growth dominates.
inline bool rbf_far_extrapolation(const RbfSurrogate& s, std::span<const double> x) {
  return nearest_center_distance(s, x) > std::sqrt(static_cast<double>(s.dims));
}

}  // namespace scalebridge
