#pragma once

// Fixed-budget comparison of optimizer-directed and uniform sampling: both arms
// get the same per-iteration budget, retrain an RBF surrogate each iteration,
// and are scored globally and near the known minimizer.

#include "scalebridge/optimizer_sampling.hpp"
#include "scalebridge/validity.hpp"

namespace scalebridge {

/// Many short-lived solvers with a wide initial simplex: the restarts keep global
/// coverage while the solver steps still concentrate points near the minimizer.
inline OptimizerSamplerConfig ab_optimizer_defaults() {
  OptimizerSamplerConfig c;
  c.k_solvers = 6;
  c.nelder_mead.initial_scale = 0.5;
  c.nelder_mead.max_iters = 50;
  return c;
}

struct AbTestConfig {
  std::size_t dims = 8;
  std::size_t iterations = 10;
  std::size_t budget = 60;  // truth evaluations per iteration and arm
  OptimizerSamplerConfig optimizer = ab_optimizer_defaults();
  double rbf_lambda = 1e-10;
  double near_radius = 0.1;  // normalized distance from the minimizer
  std::size_t near_points = 2000;
  std::size_t test_points = 4096;
  std::uint64_t seed = 0;

  void validate() const {
    if (dims < 2) throw ArgumentError("AbTestConfig: dims must be >= 2");
    if (iterations == 0 || budget == 0) throw ArgumentError("AbTestConfig: iterations and budget must be >= 1");
    if (budget < optimizer.k_solvers) throw ArgumentError("AbTestConfig: budget must cover one start per solver");
    if (!(near_radius > 0.0)) throw ArgumentError("AbTestConfig: near_radius must be > 0");
  }
};

struct AbArm {
  std::string name;
  ValidityHistory history;  // test_score = global average model error
  std::vector<double> near_error;
  Dataset database;
  double final_global = 0.0;
  double final_near = 0.0;
  double near_fraction = 0.0;  // share of evaluations within near_radius of the minimizer
};

struct AbResult {
  AbArm optimizer;
  AbArm uniform;
};

/// Uniform points in the normalized ball of radius r around center, mapped to the domain.
inline std::vector<std::vector<double>> ball_points(const Domain& domain, std::span<const double> center, double r,
                                                    std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto uc = normalize(domain, center);
  const std::size_t d = uc.size();
  std::vector<std::vector<double>> out;
  out.reserve(n);
  std::vector<double> v(d);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (double& c : v) {
      c = standard_normal(rng);
      norm += c * c;
    }
    norm = std::sqrt(norm);
    const double radius = r * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
    std::vector<double> u(d);
    for (std::size_t k = 0; k < d; ++k) u[k] = uc[k] + radius * v[k] / norm;
    out.push_back(denormalize(domain, normalize(domain, denormalize(domain, u), OutOfBounds::Clamp)));
  }
  return out;
}

inline AbResult run_sampling_ab(const AbTestConfig& cfg) {
  cfg.validate();
  auto truth = std::make_shared<RosenbrockModel>(cfg.dims);
  const Domain domain = truth->domain();
  const auto minimizer = truth->minimizer();
  const Dataset test = validity_test_set(*truth, domain, cfg.test_points, derive_seed(cfg.seed, 7));
  const Dataset near = evaluate_all(*truth, domain,
                                    ball_points(domain, minimizer, cfg.near_radius, cfg.near_points,
                                                derive_seed(cfg.seed, 8)),
                                    cfg.seed);
  const Trainer trainer = Trainer::rbf(cfg.rbf_lambda);
  const auto u_min = normalize(domain, minimizer);

  auto run_arm = [&](Sampler& sampler, std::string name) {
    AbArm arm;
    arm.name = std::move(name);
    arm.database = Dataset(domain);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
      auto pts = sampler.draw(arm.database, cfg.budget);
      for (auto& p : pts) arm.database.add(std::move(p));
      ValidityRecord rec;
      rec.iteration = it;
      rec.db_size = arm.database.size();
      rec.evals = cfg.budget;
      double near_err = std::numeric_limits<double>::infinity();
      try {
        const Surrogate s = trainer.fit(arm.database, derive_seed(cfg.seed, it));
        rec.test_score = average_model_error(s, test);
        near_err = average_model_error(s, near);
      } catch (const FitError&) {
        rec.test_score = std::numeric_limits<double>::infinity();
      }
      rec.saved = rec.test_score < best;
      best = std::min(best, rec.test_score);
      arm.history.records.push_back(rec);
      arm.near_error.push_back(near_err);
    }
    arm.final_global = arm.history.records.back().test_score;
    arm.final_near = arm.near_error.back();
    std::size_t close = 0;
    for (const auto& p : arm.database)
      if (std::sqrt(squared_distance(normalize(domain, p.x), u_min)) <= cfg.near_radius) ++close;
    arm.near_fraction = static_cast<double>(close) / static_cast<double>(arm.database.size());
    return arm;
  };

  // Identical seeds make the optimizer's first draw equal to the uniform arm's first points.
  OptimizerDirectedSampler opt(truth, domain, cfg.optimizer, derive_seed(cfg.seed, 3));
  UniformSampler uni(truth, domain, derive_seed(cfg.seed, 3));
  AbResult r;
  r.optimizer = run_arm(opt, "optimizer");
  r.uniform = run_arm(uni, "uniform");
  return r;
}

}  // namespace scalebridge
