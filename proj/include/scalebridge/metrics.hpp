#pragma once

#include "scalebridge/core.hpp"

namespace scalebridge {

class DegenerateMetric : public Error {
public:
  using Error::Error;
};

/// Coefficient of determination 1 - SS_res/SS_tot. Can be negative.
inline double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ArgumentError("r_squared: length mismatch");
  if (y_true.size() < 2) throw ArgumentError("r_squared: need at least 2 points");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (ss_tot == 0.0) throw DegenerateMetric("r_squared: zero variance in y_true");
  return 1.0 - ss_res / ss_tot;
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) throw ArgumentError("rmse: bad lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) s += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  return std::sqrt(s / static_cast<double>(y_true.size()));
}

inline double mean_absolute_error(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) throw ArgumentError("mean_absolute_error: bad lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) s += std::abs(y_true[i] - y_pred[i]);
  return s / static_cast<double>(y_true.size());
}

/// Sorted-copy quantile with linear interpolation (type 7).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ArgumentError("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("spearman: bad lengths");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= static_cast<double>(ra.size());
  mb /= static_cast<double>(rb.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace scalebridge
