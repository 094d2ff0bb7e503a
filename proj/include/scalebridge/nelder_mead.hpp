#pragma once

// Nelder-Mead simplex search as an ask/tell state machine, so a solver can be
// paused when a shared evaluation budget runs out and resumed later.

#include <functional>
#include <numeric>

#include "scalebridge/core.hpp"

namespace scalebridge {

struct NelderMeadConfig {
  double alpha = 1.0;  // reflection
  double gamma = 2.0;  // expansion
  double rho = 0.5;    // contraction
  double sigma = 0.5;  // shrink
  std::size_t max_iters = 1000;
  double f_tol = 1e-6;
  double x_tol = 1e-6;
  double initial_scale = 0.1;

  void validate() const {
    if (!(alpha > 0.0)) throw ArgumentError("NelderMeadConfig: alpha must be > 0");
    if (!(gamma > 1.0)) throw ArgumentError("NelderMeadConfig: gamma must be > 1");
    if (!(rho > 0.0 && rho < 1.0)) throw ArgumentError("NelderMeadConfig: rho must lie in (0, 1)");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ArgumentError("NelderMeadConfig: sigma must lie in (0, 1)");
    if (!(initial_scale > 0.0)) throw ArgumentError("NelderMeadConfig: initial_scale must be > 0");
  }
};

enum class NelderMeadStop { Running, FunctionTolerance, SimplexTolerance, MaxIterations };

class NelderMead {
public:
  /// Simplex x0 plus x0 + scale*e_i. With bounds, offsets that would leave [lo, hi] are flipped.
  static std::vector<std::vector<double>> axis_simplex(const std::vector<double>& x0, double scale,
                                                       const std::vector<double>* lo = nullptr,
                                                       const std::vector<double>* hi = nullptr) {
    std::vector<std::vector<double>> s{x0};
    for (std::size_t i = 0; i < x0.size(); ++i) {
      auto v = x0;
      v[i] += scale;
      if (hi && lo && v[i] > (*hi)[i]) v[i] = x0[i] - scale;
      s.push_back(std::move(v));
    }
    return s;
  }

  NelderMead(std::vector<std::vector<double>> simplex, NelderMeadConfig cfg)
      : cfg_(cfg), x_(std::move(simplex)) {
    cfg_.validate();
    if (x_.size() < 2) throw ArgumentError("NelderMead: simplex needs at least 2 vertices");
    dims_ = x_.front().size();
    if (x_.size() != dims_ + 1) throw ArgumentError("NelderMead: simplex must have d+1 vertices");
    f_.assign(x_.size(), std::numeric_limits<double>::infinity());
    pending_ = x_[0];
  }

  NelderMead(const std::vector<double>& x0, NelderMeadConfig cfg)
      : NelderMead(axis_simplex(x0, cfg.initial_scale), cfg) {}

  bool done() const noexcept { return stop_ != NelderMeadStop::Running; }
  NelderMeadStop stop_reason() const noexcept { return stop_; }
  std::size_t iterations() const noexcept { return iterations_; }
  std::size_t evaluations() const noexcept { return evaluations_; }

  /// Point whose objective value the solver needs next.
  const std::vector<double>& ask() const {
    if (done()) throw ArgumentError("NelderMead::ask: solver has terminated");
    return pending_;
  }

  /// Reports f(ask()). Non-finite values count as +infinity.
  void tell(double f) {
    if (done()) throw ArgumentError("NelderMead::tell: solver has terminated");
    if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
    ++evaluations_;
    switch (phase_) {
      case Phase::Init:
        f_[index_] = f;
        if (++index_ <= dims_) {
          pending_ = x_[index_];
          return;
        }
        order();
        finish_iteration(false);
        return;
      case Phase::Reflect: {
        fr_ = f;
        xr_ = pending_;
        if (fr_ < f_[0]) {
          phase_ = Phase::Expand;
          pending_ = along(xr_, cfg_.gamma);
          return;
        }
        if (fr_ < f_[dims_ - 1]) {
          replace_worst(xr_, fr_);
          return;
        }
        if (fr_ < f_[dims_]) {
          phase_ = Phase::ContractOutside;
          pending_ = along(xr_, cfg_.rho);
        } else {
          phase_ = Phase::ContractInside;
          pending_ = along(x_[dims_], cfg_.rho);
        }
        return;
      }
      case Phase::Expand:
        if (f < fr_) replace_worst(pending_, f);
        else replace_worst(xr_, fr_);
        return;
      case Phase::ContractOutside:
        if (f <= fr_) replace_worst(pending_, f);
        else begin_shrink();
        return;
      case Phase::ContractInside:
        if (f < f_[dims_]) replace_worst(pending_, f);
        else begin_shrink();
        return;
      case Phase::Shrink:
        f_[index_] = f;
        if (++index_ <= dims_) {
          pending_ = x_[index_];
          return;
        }
        order();
        finish_iteration(true);
        return;
    }
  }

  const std::vector<double>& best_x() const { return x_[0]; }
  double best_f() const { return f_[0]; }
  const std::vector<std::vector<double>>& simplex() const { return x_; }
  const std::vector<double>& values() const { return f_; }

private:
  enum class Phase { Init, Reflect, Expand, ContractOutside, ContractInside, Shrink };

  /// centroid + coef * (p - centroid), centroid over all but the worst vertex.
  std::vector<double> along(const std::vector<double>& p, double coef) const {
    std::vector<double> out(dims_);
    for (std::size_t k = 0; k < dims_; ++k) out[k] = centroid_[k] + coef * (p[k] - centroid_[k]);
    return out;
  }

  void order() {
    std::vector<std::size_t> idx(x_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f_[a] < f_[b]; });
    std::vector<std::vector<double>> x2;
    std::vector<double> f2;
    for (auto i : idx) {
      x2.push_back(std::move(x_[i]));
      f2.push_back(f_[i]);
    }
    x_ = std::move(x2);
    f_ = std::move(f2);
  }

  void replace_worst(const std::vector<double>& x, double f) {
    x_[dims_] = x;
    f_[dims_] = f;
    order();
    finish_iteration(true);
  }

  void begin_shrink() {
    for (std::size_t i = 1; i <= dims_; ++i)
      for (std::size_t k = 0; k < dims_; ++k) x_[i][k] = x_[0][k] + cfg_.sigma * (x_[i][k] - x_[0][k]);
    phase_ = Phase::Shrink;
    index_ = 1;
    pending_ = x_[1];
  }

  void finish_iteration(bool counted) {
    if (counted) ++iterations_;
    const double spread = f_[dims_] - f_[0];
    double diameter = 0.0;
    for (std::size_t i = 1; i <= dims_; ++i) diameter = std::max(diameter, std::sqrt(squared_distance(x_[i], x_[0])));
    if (std::isfinite(spread) && spread < cfg_.f_tol) stop_ = NelderMeadStop::FunctionTolerance;
    else if (diameter < cfg_.x_tol) stop_ = NelderMeadStop::SimplexTolerance;
    else if (iterations_ >= cfg_.max_iters) stop_ = NelderMeadStop::MaxIterations;
    if (done()) return;
    centroid_.assign(dims_, 0.0);
    for (std::size_t i = 0; i < dims_; ++i)
      for (std::size_t k = 0; k < dims_; ++k) centroid_[k] += x_[i][k] / static_cast<double>(dims_);
    phase_ = Phase::Reflect;
    pending_ = along(x_[dims_], -cfg_.alpha);
  }

  NelderMeadConfig cfg_;
  std::size_t dims_ = 0;
  std::vector<std::vector<double>> x_;
  std::vector<double> f_;
  std::vector<double> centroid_;
  std::vector<double> pending_;
  std::vector<double> xr_;
  double fr_ = 0.0;
  Phase phase_ = Phase::Init;
  std::size_t index_ = 0;
  std::size_t iterations_ = 0;
  std::size_t evaluations_ = 0;
  NelderMeadStop stop_ = NelderMeadStop::Running;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  NelderMeadStop reason = NelderMeadStop::Running;
  std::vector<std::pair<std::vector<double>, double>> log;  // every evaluated point
  std::vector<double> best_history;                         // best vertex value after each iteration
};

inline NelderMeadResult nelder_mead_run(const std::function<double(std::span<const double>)>& f,
                                        const std::vector<double>& x0, const NelderMeadConfig& cfg) {
  NelderMead nm(x0, cfg);
  NelderMeadResult r;
  std::size_t last_iter = 0;
  while (!nm.done()) {
    const auto x = nm.ask();
    double v = f(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    r.log.emplace_back(x, v);
    nm.tell(v);
    if (nm.iterations() != last_iter || nm.done()) {
      last_iter = nm.iterations();
      r.best_history.push_back(nm.best_f());
    }
  }
  r.x = nm.best_x();
  r.f = nm.best_f();
  r.iterations = nm.iterations();
  r.reason = nm.stop_reason();
  return r;
}

}  // namespace scalebridge
