#pragma once

// Domain types shared by every module: errors, seeded RNG helpers, the
// input box, sample points and datasets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scalebridge {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  DomainError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeds

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent child seeds from (seed, stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  // 53 random bits; avoids implementation-defined distribution internals.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller, one value per call.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Fisher-Yates with uniform01, so permutations are identical across standard libraries.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

// ---------------------------------------------------------------------------
// Domain

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Bounds&) const = default;
};

/// How normalize treats a component outside [lo, hi].
enum class OutOfBounds {
  Error,       // throw DomainError
  Clamp,       // map onto the nearest face
  Extrapolate  // continue the affine (or log-affine) map beyond [0, 1]
};

class Domain {
public:
  Domain() = default;

  Domain(std::vector<Bounds> bounds, std::vector<bool> log_scaled = {})
      : bounds_(std::move(bounds)), log_scaled_(std::move(log_scaled)) {
    if (log_scaled_.empty()) log_scaled_.assign(bounds_.size(), false);
    if (log_scaled_.size() != bounds_.size())
      throw ArgumentError("Domain: log_scaled size does not match bounds");
    if (bounds_.empty()) throw ArgumentError("Domain: at least one dimension required");
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      if (!(bounds_[i].lo < bounds_[i].hi))
        throw DomainError(i, "Domain: lo must be < hi in dimension " + std::to_string(i));
      if (log_scaled_[i] && !(bounds_[i].lo > 0.0))
        throw DomainError(i, "Domain: log-scaled dimension " + std::to_string(i) + " needs lo > 0");
    }
  }

  /// Same bounds in every dimension, linear scaling.
  static Domain box(std::size_t dims, double lo, double hi) {
    return Domain(std::vector<Bounds>(dims, Bounds{lo, hi}));
  }

  std::size_t dims() const noexcept { return bounds_.size(); }
  const std::vector<Bounds>& bounds() const noexcept { return bounds_; }
  const std::vector<bool>& log_scaled() const noexcept { return log_scaled_; }
  const Bounds& operator[](std::size_t i) const { return bounds_[i]; }

  bool contains(std::span<const double> x) const {
    if (x.size() != dims()) return false;
    for (std::size_t i = 0; i < dims(); ++i)
      if (!(x[i] >= bounds_[i].lo && x[i] <= bounds_[i].hi)) return false;
    return true;
  }

  bool operator==(const Domain&) const = default;

private:
  std::vector<Bounds> bounds_;
  std::vector<bool> log_scaled_;
};

/// Maps x (domain units) to the unit cube; log-scaled dims go through log10 first.
inline std::vector<double> normalize(const Domain& domain, std::span<const double> x,
                                     OutOfBounds policy = OutOfBounds::Error) {
  if (x.size() != domain.dims())
    throw ArgumentError("normalize: expected " + std::to_string(domain.dims()) +
                        " components, got " + std::to_string(x.size()));
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [lo, hi] = domain[i];
    double xi = x[i];
    if (!std::isfinite(xi)) throw DomainError(i, "normalize: non-finite component " + std::to_string(i));
    if (xi < lo || xi > hi) {
      if (policy == OutOfBounds::Error)
        throw DomainError(i, "normalize: component " + std::to_string(i) + " = " +
                                 std::to_string(xi) + " outside [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
      if (policy == OutOfBounds::Clamp) xi = std::clamp(xi, lo, hi);
    }
    if (domain.log_scaled()[i]) {
      if (!(xi > 0.0)) throw DomainError(i, "normalize: non-positive value in log-scaled dimension");
      u[i] = (std::log10(xi) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    } else {
      u[i] = (xi - lo) / (hi - lo);
    }
  }
  return u;
}

inline std::vector<double> denormalize(const Domain& domain, std::span<const double> u) {
  if (u.size() != domain.dims()) throw ArgumentError("denormalize: dimension mismatch");
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto [lo, hi] = domain[i];
    if (domain.log_scaled()[i]) {
      const double llo = std::log10(lo), lhi = std::log10(hi);
      x[i] = std::pow(10.0, llo + u[i] * (lhi - llo));
    } else {
      x[i] = lo + u[i] * (hi - lo);
    }
  }
  // Pin the faces exactly so the box endpoints round-trip.
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0) x[i] = domain[i].lo;
    if (u[i] == 1.0) x[i] = domain[i].hi;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Sample points

enum class Provenance { TruthEval, Surrogate, DatabaseHit };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::TruthEval: return "truth";
    case Provenance::Surrogate: return "surrogate";
    case Provenance::DatabaseHit: return "db_hit";
  }
  return "truth";
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "truth") return Provenance::TruthEval;
  if (s == "surrogate") return Provenance::Surrogate;
  if (s == "db_hit") return Provenance::DatabaseHit;
  throw IoError("unknown provenance '" + std::string(s) + "'");
}

struct SamplePoint {
  std::vector<double> x;
  std::vector<double> y;
  Provenance provenance = Provenance::TruthEval;
  double quality = 0.0;  // s_i: 0 for truth evaluations, normalized committee spread otherwise
  std::int64_t step = 0;

  bool operator==(const SamplePoint&) const = default;
};

inline SamplePoint truth_point(std::vector<double> x, std::vector<double> y, std::int64_t step = 0) {
  return SamplePoint{std::move(x), std::move(y), Provenance::TruthEval, 0.0, step};
}

class Dataset {
public:
  Dataset() = default;
  explicit Dataset(Domain domain, std::vector<SamplePoint> points = {})
      : domain_(std::move(domain)), points_(std::move(points)) {}

  const Domain& domain() const noexcept { return domain_; }
  const std::vector<SamplePoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const SamplePoint& operator[](std::size_t i) const { return points_[i]; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  void add(SamplePoint p) {
    if (p.x.size() != domain_.dims()) throw ArgumentError("Dataset::add: input dimension mismatch");
    if (p.quality < 0.0) throw ArgumentError("Dataset::add: quality must be >= 0");
    if (p.provenance == Provenance::TruthEval && p.quality != 0.0)
      throw ArgumentError("Dataset::add: truth evaluations carry quality 0");
    points_.push_back(std::move(p));
  }

  void append(const Dataset& other) {
    for (const auto& p : other) add(p);
  }

  /// Points outside the domain box (the heated scenario produces these on purpose).
  std::size_t out_of_domain_count() const {
    return static_cast<std::size_t>(std::count_if(
        points_.begin(), points_.end(), [&](const SamplePoint& p) { return !domain_.contains(p.x); }));
  }

  std::size_t output_dims() const { return points_.empty() ? 0 : points_.front().y.size(); }

  bool operator==(const Dataset&) const = default;

private:
  Domain domain_;
  std::vector<SamplePoint> points_;
};

/// Random partition; the second part holds round(fraction * N) points.
inline std::pair<Dataset, Dataset> split_random(const Dataset& data, double fraction, std::uint64_t seed) {
  if (data.empty()) throw ArgumentError("split_random: empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("split_random: fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  const auto n_second = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  shuffle(idx, rng);
  std::vector<char> in_second(n, 0);
  for (std::size_t k = 0; k < n_second; ++k) in_second[idx[k]] = 1;
  Dataset first(data.domain()), second(data.domain());
  for (std::size_t i = 0; i < n; ++i) (in_second[i] ? second : first).add(data[i]);
  return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Text formatting shared by the CSV writers

/// Shortest-exact formatting: 17 significant digits round-trip every double.
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw IoError("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw IoError("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw IoError("number out of range: '" + s + "'");
  }
}

// Dataset CSV: x0..x{d-1}, y0..y{k-1}, provenance, quality, step

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  const std::size_t d = data.domain().dims();
  const std::size_t k = data.output_dims();
  for (std::size_t i = 0; i < d; ++i) os << 'x' << i << ',';
  for (std::size_t i = 0; i < k; ++i) os << 'y' << i << ',';
  os << "provenance,quality,step\n";
  for (const auto& p : data) {
    if (p.y.size() != k) throw IoError("write_dataset_csv: ragged output vectors");
    for (double v : p.x) os << format_double(v) << ',';
    for (double v : p.y) os << format_double(v) << ',';
    os << to_string(p.provenance) << ',' << format_double(p.quality) << ',' << p.step << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& is, const Domain& domain) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("read_dataset_csv: missing header");
  const auto cols = split_csv_line(header);
  if (cols.size() < 3 || cols[cols.size() - 3] != "provenance" || cols[cols.size() - 2] != "quality" ||
      cols.back() != "step")
    throw IoError("read_dataset_csv: header must end with provenance,quality,step");
  std::size_t d = 0, k = 0;
  for (std::size_t c = 0; c + 3 < cols.size(); ++c) {
    if (cols[c] == "x" + std::to_string(d) && k == 0) ++d;
    else if (cols[c] == "y" + std::to_string(k)) ++k;
    else throw IoError("read_dataset_csv: unexpected column '" + cols[c] + "'");
  }
  if (d != domain.dims()) throw IoError("read_dataset_csv: input dimension does not match domain");
  Dataset data(domain);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != cols.size()) throw IoError("read_dataset_csv: wrong column count");
    SamplePoint p;
    for (std::size_t i = 0; i < d; ++i) p.x.push_back(parse_double(cells[i]));
    for (std::size_t i = 0; i < k; ++i) p.y.push_back(parse_double(cells[d + i]));
    p.provenance = provenance_from_string(cells[d + k]);
    p.quality = parse_double(cells[d + k + 1]);
    p.step = std::stoll(cells[d + k + 2]);
    data.add(std::move(p));
  }
  return data;
}

inline void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_dataset_csv(os, data);
}

inline Dataset load_dataset_csv(const std::string& path, const Domain& domain) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_dataset_csv(is, domain);
}

// Row-major helpers for the numeric modules.

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

}  // namespace scalebridge
