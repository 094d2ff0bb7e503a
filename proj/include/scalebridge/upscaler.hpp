#pragma once

// Indirect coupling: fit emulators E_f (fine inputs -> observables) and E_c
// (coarse parameters -> observables), freeze them, then train an upscaler U so
// that E_c(U(x)) matches E_f(x). Matrices hold one sample per column.

#include "scalebridge/metrics.hpp"
#include "scalebridge/mlp.hpp"

namespace scalebridge {

class EmulatorQualityError : public Error {
public:
  EmulatorQualityError(double fine_r2, double coarse_r2, const std::string& what)
      : Error(what), fine_r2_(fine_r2), coarse_r2_(coarse_r2) {}
  double fine_r2() const noexcept { return fine_r2_; }
  double coarse_r2() const noexcept { return coarse_r2_; }

private:
  double fine_r2_, coarse_r2_;
};

struct EmulatorPair {
  Mlp fine;
  Mlp coarse;
  double fine_r2 = 0.0;    // min over observables on the held-out split
  double coarse_r2 = 0.0;

  std::size_t observables() const { return fine.outputs(); }
};

struct EmulatorConfig {
  TrainConfig net{{24, 24}, 4000, 1e-2, 0.9, 1.0, 400, 0};
  double holdout_fraction = 0.2;
  double r2_min = 0.9;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> holdout_split(Eigen::Index n, double fraction,
                                                                                   std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  shuffle(idx, rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<Eigen::Index> hold(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<Eigen::Index> train(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());
  return {train, hold};
}

inline Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

inline double min_r2(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < truth.rows(); ++r) {
    const Eigen::VectorXd t = truth.row(r).transpose(), p = pred.row(r).transpose();
    worst = std::min(worst, r_squared(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                                      std::span<const double>(p.data(), static_cast<std::size_t>(p.size()))));
  }
  return worst;
}

inline std::pair<Mlp, double> fit_emulator(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const EmulatorConfig& cfg,
                                           std::uint64_t seed) {
  auto [train, hold] = holdout_split(x.cols(), cfg.holdout_fraction, seed);
  if (hold.size() < 2) throw ArgumentError("train_emulators: held-out split needs at least 2 samples");
  TrainConfig tc = cfg.net;
  tc.seed = derive_seed(seed, 1);
  Mlp net = mlp_train(columns(x, train), columns(y, train), tc);
  const double r2 = min_r2(columns(y, hold), net.predict(columns(x, hold)));
  return {std::move(net), r2};
}

}  // namespace detail

/// Fits both emulators; each must reach R^2 >= r2_min on its held-out split.
inline EmulatorPair train_emulators(const Eigen::MatrixXd& fine_x, const Eigen::MatrixXd& fine_y,
                                    const Eigen::MatrixXd& coarse_p, const Eigen::MatrixXd& coarse_y,
                                    const EmulatorConfig& cfg = {}) {
  if (fine_x.cols() == 0 || coarse_p.cols() == 0) throw ArgumentError("train_emulators: empty dataset");
  if (fine_y.rows() != coarse_y.rows())
    throw ArgumentError("train_emulators: fine and coarse observable dimensions differ (" +
                        std::to_string(fine_y.rows()) + " vs " + std::to_string(coarse_y.rows()) + ")");
  if (fine_x.cols() != fine_y.cols() || coarse_p.cols() != coarse_y.cols())
    throw ArgumentError("train_emulators: sample count mismatch");
  EmulatorPair pair;
  std::tie(pair.fine, pair.fine_r2) = detail::fit_emulator(fine_x, fine_y, cfg, derive_seed(cfg.seed, 1));
  std::tie(pair.coarse, pair.coarse_r2) = detail::fit_emulator(coarse_p, coarse_y, cfg, derive_seed(cfg.seed, 2));
  if (pair.fine_r2 < cfg.r2_min || pair.coarse_r2 < cfg.r2_min)
    throw EmulatorQualityError(pair.fine_r2, pair.coarse_r2,
                               "train_emulators: held-out R^2 below " + std::to_string(cfg.r2_min) + " (fine " +
                                   std::to_string(pair.fine_r2) + ", coarse " + std::to_string(pair.coarse_r2) + ")");
  return pair;
}

struct UpscalerConfig {
  TrainConfig net{{16, 16}, 3000, 1e-2, 0.9, 1.0, 400, 0};
};

struct Upscaler {
  Mlp net;  // raw outputs are coarse parameters
  double composite_rmse = 0.0;

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const { return net.predict(x); }
};

/// Builds U with input statistics from x and output statistics equal to E_c's input
/// statistics, so U's standardized output feeds E_c's standardized input directly.
inline Mlp make_upscaler_net(const EmulatorPair& pair, const Eigen::MatrixXd& x, const TrainConfig& cfg) {
  std::vector<std::size_t> layers{static_cast<std::size_t>(x.rows())};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(pair.coarse.inputs());
  Mlp u(layers, cfg.init_scale, cfg.seed);
  u.fit_standardization(x, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pair.coarse.inputs()), x.cols()));
  u.set_standardization(u.input_mean(), u.input_std(), pair.coarse.input_mean(), pair.coarse.input_std());
  return u;
}

/// Composite loss (1/N) sum_i ||E_c(U(x_i)) - target_i||^2 in raw observable units, with the
/// gradient with respect to U's parameters. E_c is only read.
inline double composite_loss(const Mlp& upscaler, const Mlp& coarse, const Eigen::MatrixXd& xs_std,
                             const Eigen::MatrixXd& target, Eigen::VectorXd* grad) {
  Mlp::Cache cu, cc;
  const Eigen::MatrixXd us = upscaler.forward_standardized(xs_std, grad ? &cu : nullptr);
  const Eigen::MatrixXd cs = coarse.forward_standardized(us, grad ? &cc : nullptr);
  const Eigen::MatrixXd c = (cs.array().colwise() * coarse.output_std().array()).colwise() + coarse.output_mean().array();
  const Eigen::MatrixXd diff = c - target;
  const double n = static_cast<double>(xs_std.cols());
  const double loss = diff.squaredNorm() / n;
  if (grad) {
    const Eigen::MatrixXd g_cs = ((2.0 / n) * diff).array().colwise() * coarse.output_std().array();
    Eigen::MatrixXd g_raw_in;
    coarse.backward_standardized(cc, g_cs, nullptr, &g_raw_in);
    const Eigen::MatrixXd g_us = g_raw_in.array().colwise() * coarse.input_std().array();
    upscaler.backward_standardized(cu, g_us, grad);
  }
  return loss;
}

inline Upscaler train_upscaler(const EmulatorPair& pair, const Eigen::MatrixXd& fine_inputs,
                               const UpscalerConfig& cfg = {}) {
  cfg.net.validate();
  if (fine_inputs.rows() != static_cast<Eigen::Index>(pair.fine.inputs()))
    throw ArgumentError("train_upscaler: fine input dimension mismatch");
  if (fine_inputs.cols() < 2) throw ArgumentError("train_upscaler: need at least 2 inputs");
  const Eigen::MatrixXd target = pair.fine.predict(fine_inputs);
  Mlp u = make_upscaler_net(pair, fine_inputs, cfg.net);
  const Eigen::MatrixXd xs = u.standardize_inputs(fine_inputs);
  Mlp work = u;
  auto loss_grad = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
    work.set_parameters(p);
    return composite_loss(work, pair.coarse, xs, target, g);
  };
  std::vector<double> history;
  const Eigen::VectorXd best = momentum_descent(u.parameters(), loss_grad, cfg.net.epochs, cfg.net.learning_rate,
                                                cfg.net.momentum, cfg.net.patience, history);
  u.set_parameters(best);
  u.loss_history() = std::move(history);
  if (!u.all_finite()) throw TrainingDiverged(u.loss_history().size(), "train_upscaler: non-finite parameters");
  Upscaler up{std::move(u), 0.0};
  const double loss = composite_loss(up.net, pair.coarse, xs, target, nullptr);
  up.composite_rmse = std::sqrt(loss / static_cast<double>(target.rows()));
  return up;
}

/// RMSE of E_c(U(x)) against E_f(x), averaged over observables.
inline double composite_rmse(const EmulatorPair& pair, const Upscaler& u, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd diff = pair.coarse.predict(u(x)) - pair.fine.predict(x);
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

/// Best single coarse parameter vector for all x, by golden-section search per
/// dimension (coordinate descent) over [lo, hi].
inline Eigen::VectorXd best_constant_parameter(const EmulatorPair& pair, const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::MatrixXd target = pair.fine.predict(x);
  Eigen::VectorXd p = 0.5 * (lo + hi);
  auto loss = [&](const Eigen::VectorXd& q) {
    const Eigen::MatrixXd c = pair.coarse.predict(Eigen::MatrixXd(q)).replicate(1, x.cols());
    return (c - target).squaredNorm();
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < 4; ++sweep) {
    for (Eigen::Index d = 0; d < p.size(); ++d) {
      double a = lo(d), b = hi(d);
      for (int it = 0; it < 60; ++it) {
        const double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
        Eigen::VectorXd q1 = p, q2 = p;
        q1(d) = c1;
        q2(d) = c2;
        if (loss(q1) < loss(q2)) b = c2;
        else a = c1;
      }
      p(d) = 0.5 * (a + b);
    }
  }
  return p;
}

inline double constant_baseline_rmse(const EmulatorPair& pair, const Eigen::MatrixXd& x, const Eigen::VectorXd& p) {
  const Eigen::MatrixXd c = pair.coarse.predict(Eigen::MatrixXd(p)).replicate(1, x.cols());
  const Eigen::MatrixXd diff = c - pair.fine.predict(x);
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

/// Direct coupling baseline for scalar coarse parameters: per point, invert E_c by
/// golden-section search so that E_c(p) matches E_f(x).
inline Eigen::MatrixXd direct_coupling(const EmulatorPair& pair, const Eigen::MatrixXd& x, double lo, double hi) {
  if (pair.coarse.inputs() != 1) throw ArgumentError("direct_coupling: needs a scalar coarse parameter");
  const Eigen::MatrixXd target = pair.fine.predict(x);
  Eigen::MatrixXd p(1, x.cols());
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto loss = [&](double q) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = q;
      return (pair.coarse.predict(m).col(0) - target.col(j)).squaredNorm();
    };
    double a = lo, b = hi;
    for (int it = 0; it < 60; ++it) {
      const double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
      if (loss(c1) < loss(c2)) b = c2;
      else a = c1;
    }
    p(0, j) = 0.5 * (a + b);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Synthetic adsorption demo

struct AdsorptionConfig {
  double c1 = 2.0;
  double w0 = 5.0;
  double rho_lo = 0.1, rho_hi = 0.8;
  double t_lo = 0.7, t_hi = 2.0;
  double w_lo = 2.0, w_hi = 20.0;
  std::size_t fine_samples = 400;
  std::size_t coarse_samples = 200;
  EmulatorConfig emulator;
  UpscalerConfig upscaler;
  std::uint64_t seed = 0;
};

/// Excess density observable of a slit pore: rho_b (1 + c1 exp(-w / w0) / sqrt(T)).
inline double adsorption_observable(double rho_b, double temperature, double width, double c1 = 2.0, double w0 = 5.0) {
  return rho_b * (1.0 + c1 * std::exp(-width / w0) / std::sqrt(temperature));
}

struct AdsorptionReport {
  EmulatorPair pair;
  Upscaler upscaler;
  Eigen::MatrixXd x;             // fine inputs (rho_b, T, w) used for reporting
  double composite_rmse = 0.0;
  double constant_rmse = 0.0;
  double constant_parameter = 0.0;
  double direct_rmse = 0.0;
  double observable_range = 0.0;
};

inline AdsorptionReport synthetic_adsorption_demo(const AdsorptionConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 1));
  const auto nf = static_cast<Eigen::Index>(cfg.fine_samples);
  Eigen::MatrixXd xf(3, nf), yf(1, nf);
  for (Eigen::Index j = 0; j < nf; ++j) {
    xf(0, j) = cfg.rho_lo + (cfg.rho_hi - cfg.rho_lo) * uniform01(rng);
    xf(1, j) = cfg.t_lo + (cfg.t_hi - cfg.t_lo) * uniform01(rng);
    xf(2, j) = cfg.w_lo + (cfg.w_hi - cfg.w_lo) * uniform01(rng);
    yf(0, j) = adsorption_observable(xf(0, j), xf(1, j), xf(2, j), cfg.c1, cfg.w0);
  }
  const double a_lo = yf.minCoeff(), a_hi = yf.maxCoeff();
  // Coarse model: the observable equals the adsorption parameter itself.
  const double p_lo = cfg.rho_lo, p_hi = adsorption_observable(cfg.rho_hi, cfg.t_lo, cfg.w_lo, cfg.c1, cfg.w0);
  const auto nc = static_cast<Eigen::Index>(cfg.coarse_samples);
  Eigen::MatrixXd pc(1, nc), yc(1, nc);
  for (Eigen::Index j = 0; j < nc; ++j) {
    pc(0, j) = p_lo + (p_hi - p_lo) * (static_cast<double>(j) + uniform01(rng)) / static_cast<double>(nc);
    yc(0, j) = pc(0, j);
  }
  AdsorptionReport rep;
  EmulatorConfig ec = cfg.emulator;
  ec.seed = derive_seed(cfg.seed, 2);
  rep.pair = train_emulators(xf, yf, pc, yc, ec);
  UpscalerConfig uc = cfg.upscaler;
  uc.net.seed = derive_seed(cfg.seed, 3);
  rep.upscaler = train_upscaler(rep.pair, xf, uc);
  rep.x = xf;
  rep.composite_rmse = composite_rmse(rep.pair, rep.upscaler, xf);
  Eigen::VectorXd lo(1), hi(1);
  lo << p_lo;
  hi << p_hi;
  const Eigen::VectorXd pbest = best_constant_parameter(rep.pair, xf, lo, hi);
  rep.constant_parameter = pbest(0);
  rep.constant_rmse = constant_baseline_rmse(rep.pair, xf, pbest);
  const Eigen::MatrixXd pd = direct_coupling(rep.pair, xf, p_lo, p_hi);
  const Eigen::MatrixXd dd = rep.pair.coarse.predict(pd) - rep.pair.fine.predict(xf);
  rep.direct_rmse = std::sqrt(dd.squaredNorm() / static_cast<double>(dd.size()));
  rep.observable_range = a_hi - a_lo;
  return rep;
}

}  // namespace scalebridge
