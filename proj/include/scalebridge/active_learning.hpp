#pragma once

// Uncertainty-guided acquisition against uniform acquisition: both grow a dataset
// batch by batch from the same initial design and track surrogate RMSE on a fixed
// test set.

#include "scalebridge/committee.hpp"
#include "scalebridge/sampling.hpp"

namespace scalebridge {

enum class Acquisition { Uncertainty, Uniform };

inline std::string_view to_string(Acquisition a) { return a == Acquisition::Uncertainty ? "uncertainty" : "uniform"; }

struct ActiveLearningConfig {
  std::size_t initial_points = 60;
  std::size_t batch = 10;
  std::size_t max_evals = 600;
  std::size_t candidates = 2000;
  std::size_t test_points = 2000;
  double rmse_target = 5.0;
  Trainer trainer = Trainer::rbf(1e-10);
  CommitteeConfig committee;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch == 0) throw ArgumentError("ActiveLearningConfig: batch must be >= 1");
    if (initial_points == 0 || initial_points > max_evals)
      throw ArgumentError("ActiveLearningConfig: need 1 <= initial_points <= max_evals");
    if (candidates < batch) throw ArgumentError("ActiveLearningConfig: candidates must be >= batch");
    if (!(rmse_target > 0.0)) throw ArgumentError("ActiveLearningConfig: rmse_target must be > 0");
  }
};

struct AcquisitionCurve {
  std::vector<std::size_t> evals;
  std::vector<double> rmse;
  std::size_t evals_to_target = 0;  // 0 when the target was not reached

  bool reached() const { return evals_to_target != 0; }
};

inline double surrogate_rmse(const Surrogate& s, const Dataset& test) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : test) {
    const auto yhat = s.predict(p.x);
    for (std::size_t j = 0; j < yhat.size(); ++j) {
      sum += (yhat[j] - p.y[j]) * (yhat[j] - p.y[j]);
      ++count;
    }
  }
  return std::sqrt(sum / static_cast<double>(count));
}

inline AcquisitionCurve run_acquisition(const TruthModel& truth, const Domain& domain, Acquisition strategy,
                                        const ActiveLearningConfig& cfg) {
  cfg.validate();
  const Dataset test = evaluate_all(truth, domain, latin_hypercube(domain, cfg.test_points, derive_seed(cfg.seed, 1)),
                                    cfg.seed);
  Dataset data = evaluate_all(truth, domain, latin_hypercube(domain, cfg.initial_points, derive_seed(cfg.seed, 2)),
                              cfg.seed);
  AcquisitionCurve curve;
  for (std::size_t round = 0;; ++round) {
    const Surrogate s = cfg.trainer.fit(data, derive_seed(cfg.seed, 3));
    const double err = surrogate_rmse(s, test);
    curve.evals.push_back(data.size());
    curve.rmse.push_back(err);
    if (err <= cfg.rmse_target) {
      curve.evals_to_target = data.size();
      break;
    }
    if (data.size() >= cfg.max_evals) break;
    const std::size_t n = std::min(cfg.batch, cfg.max_evals - data.size());
    const auto pool = uniform_random(domain, cfg.candidates, derive_seed(cfg.seed, 1000 + round));
    std::vector<std::vector<double>> picks;
    if (strategy == Acquisition::Uniform) {
      picks.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
      CommitteeConfig cc = cfg.committee;
      cc.seed = derive_seed(cfg.seed, 2000 + round);
      const Committee c = build_committee(data, cfg.trainer, cc);
      std::vector<std::pair<double, std::size_t>> ranked;
      ranked.reserve(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) ranked.emplace_back(-committee_predict(c, pool[i]).quality, i);
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < n; ++k) picks.push_back(pool[ranked[k].second]);
    }
    for (const auto& x : picks) data.add(truth_point(x, truth.evaluate(x)));
  }
  return curve;
}

struct EfficiencyResult {
  std::vector<std::size_t> guided, uniform;  // evaluations to target per seed (max_evals if never)
  std::vector<double> ratios;                // guided / uniform per seed
  double median_ratio = 0.0;
};

/// Evaluations-to-target ratio over seeds. A run that never reaches the target
/// is charged max_evals, which understates the uniform cost and so overstates the ratio.
inline EfficiencyResult acquisition_efficiency(const TruthModel& truth, const Domain& domain,
                                               ActiveLearningConfig cfg, const std::vector<std::uint64_t>& seeds) {
  EfficiencyResult r;
  for (auto seed : seeds) {
    cfg.seed = seed;
    const auto g = run_acquisition(truth, domain, Acquisition::Uncertainty, cfg);
    const auto u = run_acquisition(truth, domain, Acquisition::Uniform, cfg);
    r.guided.push_back(g.reached() ? g.evals_to_target : cfg.max_evals);
    r.uniform.push_back(u.reached() ? u.evals_to_target : cfg.max_evals);
    r.ratios.push_back(static_cast<double>(r.guided.back()) / static_cast<double>(r.uniform.back()));
  }
  r.median_ratio = median(r.ratios);
  return r;
}

}  // namespace scalebridge
