#pragma once

// Optimizer-directed sampling: an ensemble of Nelder-Mead solvers started from
// probability-sampled points, sharing one evaluation budget. Every truth
// evaluation a solver requests becomes a database entry.

#include "scalebridge/nelder_mead.hpp"
#include "scalebridge/sampling.hpp"
#include "scalebridge/worker_pool.hpp"

namespace scalebridge {

struct OptimizerSamplerConfig {
  std::size_t k_solvers = 4;
  std::size_t objective_output = 0;
  NelderMeadConfig nelder_mead;  // runs in normalized coordinates
};

class OptimizerDirectedSampler final : public Sampler {
public:
  OptimizerDirectedSampler(TruthModelPtr truth, Domain domain, OptimizerSamplerConfig cfg, std::uint64_t seed,
                           WorkerPool* pool = nullptr)
      : truth_(std::move(truth)), domain_(std::move(domain)), cfg_(cfg), seed_(seed), pool_(pool) {
    if (cfg_.k_solvers == 0) throw ArgumentError("OptimizerDirectedSampler: k_solvers must be >= 1");
    if (cfg_.objective_output >= truth_->dim_out())
      throw ArgumentError("OptimizerDirectedSampler: objective output out of range");
    cfg_.nelder_mead.validate();
  }

  /// Solvers persist across calls, so a budget cut mid-simplex resumes on the next draw.
  std::vector<SamplePoint> draw(const Dataset&, std::size_t budget) override {
    std::vector<SamplePoint> out;
    if (budget == 0) return out;
    if (solvers_.empty()) {
      // First draw: same probability sampling as the uniform strategy with the same seed.
      const auto starts = uniform_random(domain_, cfg_.k_solvers, derive_seed(seed_, 0));
      for (const auto& x : starts) solvers_.push_back(make_solver(normalize(domain_, x, OutOfBounds::Clamp)));
    }
    const std::vector<double> lo(domain_.dims(), 0.0), hi(domain_.dims(), 1.0);
    while (out.size() < budget) {
      // One round: each solver contributes at most one in-box point.
      std::vector<std::size_t> owners;
      std::vector<std::vector<double>> asks;
      for (std::size_t i = 0; i < solvers_.size() && out.size() + asks.size() < budget; ++i) {
        auto& s = solvers_[i];
        for (;;) {
          if (s.done()) {
            ++restarts_;
            const auto x = uniform_random(domain_, 1, derive_seed(seed_, 1000 + restarts_)).front();
            s = make_solver(normalize(domain_, x, OutOfBounds::Clamp));
          }
          const auto& u = s.ask();
          bool inside = true;
          for (std::size_t k = 0; k < u.size(); ++k) inside = inside && u[k] >= lo[k] && u[k] <= hi[k];
          if (inside) break;
          s.tell(std::numeric_limits<double>::infinity());
        }
        owners.push_back(i);
        asks.push_back(s.ask());
      }
      std::vector<std::vector<double>> ys(asks.size());
      std::vector<std::vector<double>> xs(asks.size());
      for (std::size_t a = 0; a < asks.size(); ++a) xs[a] = denormalize(domain_, asks[a]);
      const std::size_t base = evals_;
      if (pool_ && pool_->size() > 1) {
        std::vector<std::future<std::vector<double>>> futs;
        for (std::size_t a = 0; a < asks.size(); ++a)
          futs.push_back(pool_->submit([this, &xs, a, base] { return truth_->evaluate(xs[a], derive_seed(seed_, base + a)); }));
        for (std::size_t a = 0; a < asks.size(); ++a) ys[a] = futs[a].get();
      } else {
        for (std::size_t a = 0; a < asks.size(); ++a) ys[a] = truth_->evaluate(xs[a], derive_seed(seed_, base + a));
      }
      evals_ += asks.size();
      for (std::size_t a = 0; a < asks.size(); ++a) {
        solvers_[owners[a]].tell(ys[a].at(cfg_.objective_output));
        out.push_back(truth_point(xs[a], ys[a]));
      }
    }
    return out;
  }

  std::string name() const override { return "optimizer"; }
  std::size_t restarts() const noexcept { return restarts_; }
  const std::vector<NelderMead>& solvers() const noexcept { return solvers_; }

private:
  NelderMead make_solver(const std::vector<double>& u0) const {
    const std::vector<double> lo(u0.size(), 0.0), hi(u0.size(), 1.0);
    return NelderMead(NelderMead::axis_simplex(u0, cfg_.nelder_mead.initial_scale, &lo, &hi), cfg_.nelder_mead);
  }

  TruthModelPtr truth_;
  Domain domain_;
  OptimizerSamplerConfig cfg_;
  std::uint64_t seed_;
  WorkerPool* pool_;
  std::vector<NelderMead> solvers_;
  std::size_t restarts_ = 0;
  std::size_t evals_ = 0;
};

/// One-shot optimizer-directed draw with exactly eval_budget truth evaluations.
inline Dataset optimizer_directed_draw(const Domain& domain, TruthModelPtr truth, std::size_t k_solvers,
                                       std::size_t eval_budget, const NelderMeadConfig& cfg, std::uint64_t seed) {
  if (k_solvers == 0) throw ArgumentError("optimizer_directed_draw: k_solvers must be >= 1");
  if (eval_budget < k_solvers * (domain.dims() + 1))
    throw ArgumentError("optimizer_directed_draw: budget " + std::to_string(eval_budget) +
                        " is smaller than one simplex per solver");
  OptimizerSamplerConfig oc;
  oc.k_solvers = k_solvers;
  oc.nelder_mead = cfg;
  OptimizerDirectedSampler sampler(std::move(truth), domain, oc, seed);
  Dataset out(domain);
  for (auto& p : sampler.draw(out, eval_budget)) out.add(std::move(p));
  return out;
}

}  // namespace scalebridge
