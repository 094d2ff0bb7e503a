#pragma once

#include "scalebridge/truth_models.hpp"

namespace scalebridge {

/// i.i.d. uniform points in the normalized cube, mapped to the domain.
inline std::vector<std::vector<double>> uniform_random(const Domain& domain, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("uniform_random: n must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> pts;
  pts.reserve(n);
  std::vector<double> u(domain.dims());
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : u) v = uniform01(rng);
    pts.push_back(denormalize(domain, u));
  }
  return pts;
}

/// Unit-cube Latin hypercube design: in every dimension exactly one point per stratum [k/n, (k+1)/n).
inline std::vector<std::vector<double>> latin_hypercube_unit(std::size_t dims, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("latin_hypercube: n must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> u(n, std::vector<double>(dims));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < dims; ++j) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    shuffle(perm, rng);
    for (std::size_t i = 0; i < n; ++i) {
      double v = (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(n);
      // Guard against rounding up into the next stratum.
      const double upper = std::nextafter(static_cast<double>(perm[i] + 1) / static_cast<double>(n), 0.0);
      u[i][j] = std::min(v, upper);
    }
  }
  return u;
}

inline std::vector<std::vector<double>> latin_hypercube(const Domain& domain, std::size_t n, std::uint64_t seed) {
  auto u = latin_hypercube_unit(domain.dims(), n, seed);
  std::vector<std::vector<double>> pts;
  pts.reserve(n);
  for (const auto& ui : u) pts.push_back(denormalize(domain, ui));
  return pts;
}

/// Greedy maximin selection from m uniform candidates: each pick maximizes the
/// normalized-space distance to existing points and earlier picks. Ties go to the
/// lowest candidate index.
inline std::vector<std::vector<double>> sparsity_sample(const Domain& domain,
                                                        const std::vector<std::vector<double>>& existing,
                                                        std::size_t n, std::size_t m_candidates,
                                                        std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sparsity_sample: n must be >= 1");
  if (m_candidates < 10 * n) throw ArgumentError("sparsity_sample: need m_candidates >= 10 n");
  Rng rng(seed);
  const std::size_t d = domain.dims();
  std::vector<std::vector<double>> cand(m_candidates, std::vector<double>(d));
  for (auto& c : cand)
    for (double& v : c) v = uniform01(rng);
  std::vector<double> min_d2(m_candidates, std::numeric_limits<double>::infinity());
  for (const auto& e : existing) {
    const auto u = normalize(domain, e, OutOfBounds::Extrapolate);
    for (std::size_t i = 0; i < m_candidates; ++i) min_d2[i] = std::min(min_d2[i], squared_distance(cand[i], u));
  }
  std::vector<char> taken(m_candidates, 0);
  std::vector<std::vector<double>> picked;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = m_candidates;
    for (std::size_t i = 0; i < m_candidates; ++i) {
      if (taken[i]) continue;
      if (best == m_candidates || min_d2[i] > min_d2[best]) best = i;
    }
    taken[best] = 1;
    picked.push_back(denormalize(domain, cand[best]));
    for (std::size_t i = 0; i < m_candidates; ++i)
      if (!taken[i]) min_d2[i] = std::min(min_d2[i], squared_distance(cand[i], cand[best]));
  }
  return picked;
}

// ---------------------------------------------------------------------------
// Sampler strategies: each draw evaluates the truth model at new points.

class Sampler {
public:
  virtual ~Sampler() = default;
  /// Returns exactly `budget` new truth evaluations.
  virtual std::vector<SamplePoint> draw(const Dataset& existing, std::size_t budget) = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline std::vector<SamplePoint> evaluate_points(const TruthModel& truth, const std::vector<std::vector<double>>& xs,
                                                std::uint64_t seed, std::size_t& counter) {
  std::vector<SamplePoint> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(truth_point(x, truth.evaluate(x, derive_seed(seed, counter++))));
  return out;
}

inline std::vector<std::vector<double>> inputs_of(const Dataset& d) {
  std::vector<std::vector<double>> xs;
  xs.reserve(d.size());
  for (const auto& p : d) xs.push_back(p.x);
  return xs;
}

}  // namespace detail

class UniformSampler final : public Sampler {
public:
  UniformSampler(TruthModelPtr truth, Domain domain, std::uint64_t seed)
      : truth_(std::move(truth)), domain_(std::move(domain)), seed_(seed) {}

  std::vector<SamplePoint> draw(const Dataset&, std::size_t budget) override {
    if (budget == 0) return {};
    return detail::evaluate_points(*truth_, uniform_random(domain_, budget, derive_seed(seed_, calls_++)), seed_, evals_);
  }
  std::string name() const override { return "uniform"; }

private:
  TruthModelPtr truth_;
  Domain domain_;
  std::uint64_t seed_;
  std::size_t calls_ = 0, evals_ = 0;
};

class LatinHypercubeSampler final : public Sampler {
public:
  LatinHypercubeSampler(TruthModelPtr truth, Domain domain, std::uint64_t seed)
      : truth_(std::move(truth)), domain_(std::move(domain)), seed_(seed) {}

  std::vector<SamplePoint> draw(const Dataset&, std::size_t budget) override {
    if (budget == 0) return {};
    return detail::evaluate_points(*truth_, latin_hypercube(domain_, budget, derive_seed(seed_, calls_++)), seed_, evals_);
  }
  std::string name() const override { return "lhs"; }

private:
  TruthModelPtr truth_;
  Domain domain_;
  std::uint64_t seed_;
  std::size_t calls_ = 0, evals_ = 0;
};

class SparsitySampler final : public Sampler {
public:
  SparsitySampler(TruthModelPtr truth, Domain domain, std::uint64_t seed, std::size_t candidate_factor = 10)
      : truth_(std::move(truth)), domain_(std::move(domain)), seed_(seed), factor_(std::max<std::size_t>(10, candidate_factor)) {}

  std::vector<SamplePoint> draw(const Dataset& existing, std::size_t budget) override {
    if (budget == 0) return {};
    const auto xs = sparsity_sample(domain_, detail::inputs_of(existing), budget, factor_ * budget,
                                    derive_seed(seed_, calls_++));
    return detail::evaluate_points(*truth_, xs, seed_, evals_);
  }
  std::string name() const override { return "sparsity"; }

private:
  TruthModelPtr truth_;
  Domain domain_;
  std::uint64_t seed_;
  std::size_t factor_;
  std::size_t calls_ = 0, evals_ = 0;
};

}  // namespace scalebridge
