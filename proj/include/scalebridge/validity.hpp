#pragma once

// Asymptotic-validity training loop: train on the database, score against a fixed
// held-out test set, fine-tune or sample when invalid, and stop once the score
// has stayed valid and stable for W consecutive iterations.

#include <optional>

#include "scalebridge/sampling.hpp"
#include "scalebridge/surrogate.hpp"

namespace scalebridge {

struct ValidityConfig {
  double tol = 1.0;
  std::size_t window = 3;
  double epsilon = 0.05;
  std::size_t budget = 20;
  std::size_t max_iterations = 50;
  std::size_t test_points = 4096;
  std::uint64_t seed = 0;

  void validate() const {
    if (window < 1) throw ArgumentError("ValidityConfig: window must be >= 1");
    if (!(tol > 0.0)) throw ArgumentError("ValidityConfig: tol must be > 0");
    if (!(epsilon > 0.0)) throw ArgumentError("ValidityConfig: epsilon must be > 0");
    if (budget == 0) throw ArgumentError("ValidityConfig: budget must be >= 1");
    if (max_iterations == 0) throw ArgumentError("ValidityConfig: max_iterations must be >= 1");
    if (test_points == 0) throw ArgumentError("ValidityConfig: test_points must be >= 1");
  }
};

struct ValidityRecord {
  std::size_t iteration = 0;
  std::size_t db_size = 0;  // training-set size behind test_score
  double test_score = 0.0;
  bool saved = false;       // surrogate became the best so far
  std::size_t evals = 0;    // truth evaluations made during the iteration
  bool operator==(const ValidityRecord&) const = default;
};

struct ValidityHistory {
  std::vector<ValidityRecord> records;

  void write_csv(std::ostream& os) const {
    os << "iteration,db_size,test_score,saved,evals\n";
    for (const auto& r : records)
      os << r.iteration << ',' << r.db_size << ',' << format_double(r.test_score) << ',' << (r.saved ? 1 : 0) << ','
         << r.evals << '\n';
  }
};

struct ValidityResult {
  Surrogate surrogate;
  double score = std::numeric_limits<double>::infinity();
  bool converged = false;
  ValidityHistory history;
  Dataset database;
  Dataset test_set;
};

/// Fixed LHS test set evaluated once with the truth model.
inline Dataset validity_test_set(const TruthModel& truth, const Domain& domain, std::size_t n, std::uint64_t seed) {
  return evaluate_all(truth, domain, latin_hypercube(domain, n, seed), seed);
}

/// Relative change between consecutive scores; the floor keeps near-zero scores from exploding it.
inline double relative_change(double prev, double cur, double tol) {
  return std::abs(cur - prev) / std::max(std::abs(prev), tol);
}

inline ValidityResult validity_loop(const TruthModel& truth, const Domain& domain, Trainer trainer, Sampler& sampler,
                                    const ValidityConfig& vcfg, Dataset initial = {}) {
  vcfg.validate();
  ValidityResult res;
  res.database = initial.domain().dims() == 0 ? Dataset(domain) : std::move(initial);
  res.test_set = validity_test_set(truth, domain, vcfg.test_points, derive_seed(vcfg.seed, 7));
  const std::size_t min_points = trainer.min_points(domain.dims());

  std::optional<Surrogate> current;
  double current_score = std::numeric_limits<double>::infinity();
  std::size_t trained_size = 0;
  std::optional<double> prev_valid;
  std::size_t streak = 0;

  auto sample = [&](std::size_t n) {
    auto pts = sampler.draw(res.database, n);
    for (auto& p : pts) res.database.add(std::move(p));
    return pts.size();
  };

  for (std::size_t it = 1; it <= vcfg.max_iterations; ++it) {
    ValidityRecord rec;
    rec.iteration = it;
    if (res.database.size() < min_points)
      rec.evals += sample(std::max(vcfg.budget, min_points - res.database.size()));
    if (!current || trained_size != res.database.size()) {
      try {
        current = trainer.fit(res.database, derive_seed(vcfg.seed, 100 + it));
        current_score = average_model_error(*current, res.test_set);
      } catch (const FitError&) {
        current.reset();
        current_score = std::numeric_limits<double>::infinity();
      }
      trained_size = res.database.size();
    }
    bool tuned = false;
    if (!(current_score <= vcfg.tol)) {
      Trainer chosen;
      try {
        Surrogate cand = fine_tune(trainer, res.database, derive_seed(vcfg.seed, 200 + it), &chosen);
        const double cand_score = average_model_error(cand, res.test_set);
        if (cand_score < current_score) {
          current = std::move(cand);
          current_score = cand_score;
          trainer = chosen;
          tuned = true;
        }
      } catch (const FitError&) {
      }
    }
    rec.db_size = trained_size;
    rec.test_score = current_score;
    if (current && current_score < res.score) {
      res.surrogate = *current;
      res.score = current_score;
      rec.saved = true;
    }

    if (current_score <= vcfg.tol) {
      if (!prev_valid || relative_change(*prev_valid, current_score, vcfg.tol) < vcfg.epsilon) ++streak;
      else streak = 1;
      prev_valid = current_score;
      if (streak >= vcfg.window) {
        res.converged = true;
        res.history.records.push_back(rec);
        break;
      }
    } else {
      streak = 0;
      prev_valid.reset();
    }
    if (!tuned) rec.evals += sample(vcfg.budget);
    res.history.records.push_back(rec);
  }
  if (!std::isfinite(res.score)) throw FitError("validity_loop: no surrogate could be fitted");
  return res;
}

}  // namespace scalebridge
