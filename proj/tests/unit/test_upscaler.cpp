#include <gtest/gtest.h>

#include "scalebridge/upscaler.hpp"

using namespace scalebridge;

namespace {

Eigen::MatrixXd grid_1d(int n, double lo, double hi) {
  Eigen::MatrixXd x(1, n);
  for (int j = 0; j < n; ++j) x(0, j) = lo + (hi - lo) * (j + 0.5) / n;
  return x;
}

EmulatorPair sin_pair() {
  const Eigen::MatrixXd x = grid_1d(200, 0.0, 1.0), p = grid_1d(200, -0.1, 1.1);
  const Eigen::MatrixXd y = (M_PI * x.array()).sin().matrix();
  return train_emulators(x, y, p, p);
}

}  // namespace

TEST(Emulators, LinearObservablesFitAlmostExactly) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 150), p = Eigen::MatrixXd::Random(1, 150);
  Eigen::MatrixXd y(2, 150), yc(2, 150);
  y.row(0) = 2 * x.row(0) - x.row(1);
  y.row(1) = x.row(1).array() + 3.0;
  yc.row(0) = 4 * p.row(0);
  yc.row(1) = 1.0 - p.row(0).array();
  const EmulatorPair pair = train_emulators(x, y, p, yc);
  EXPECT_GT(pair.fine_r2, 0.999);
  EXPECT_GT(pair.coarse_r2, 0.999);
  EXPECT_EQ(pair.observables(), 2u);
}

TEST(Emulators, MismatchedObservableDimensions) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 20), y = Eigen::MatrixXd::Random(2, 20);
  const Eigen::MatrixXd p = Eigen::MatrixXd::Random(1, 20), yc = Eigen::MatrixXd::Random(1, 20);
  EXPECT_THROW(train_emulators(x, y, p, yc), ArgumentError);
  EXPECT_THROW(train_emulators(x, y.leftCols(10), p, Eigen::MatrixXd::Random(2, 20)), ArgumentError);
}

TEST(Emulators, HoldoutSplitDeterministicPerSeed) {
  const auto a = detail::holdout_split(100, 0.2, 7), b = detail::holdout_split(100, 0.2, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.second.size(), 20u);
  EXPECT_EQ(a.first.size(), 80u);
  EXPECT_NE(detail::holdout_split(100, 0.2, 8).second, a.second);
}

TEST(Emulators, NoiseFailsQualityGate) {
  Rng rng(3);
  Eigen::MatrixXd x(1, 100), y(1, 100);
  for (int j = 0; j < 100; ++j) {
    x(0, j) = uniform01(rng);
    y(0, j) = standard_normal(rng);
  }
  EmulatorConfig cfg;
  cfg.net.epochs = 300;
  EXPECT_THROW(train_emulators(x, y, x, x, cfg), EmulatorQualityError);
}

TEST(Upscaler, CompositeGradientMatchesFiniteDifferences) {
  EmulatorPair pair;
  pair.fine = Mlp({2, 3, 2}, 1.0, 1);
  pair.coarse = Mlp({2, 4, 2}, 1.0, 2);
  Eigen::VectorXd im(2), is(2), om(2), os(2);
  im << 0.3, -1.0;
  is << 2.0, 0.5;
  om << 1.0, 4.0;
  os << 3.0, 0.2;
  pair.coarse.set_standardization(im, is, om, os);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 7), target = Eigen::MatrixXd::Random(2, 7);
  TrainConfig tc;
  tc.hidden = {3};
  tc.seed = 4;
  Mlp u = make_upscaler_net(pair, x, tc);
  const Eigen::MatrixXd xs = u.standardize_inputs(x);
  Eigen::VectorXd g;
  composite_loss(u, pair.coarse, xs, target, &g);
  const Eigen::VectorXd p0 = u.parameters();
  ASSERT_EQ(g.size(), p0.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Eigen::VectorXd p = p0;
    p(i) += h;
    u.set_parameters(p);
    const double fp = composite_loss(u, pair.coarse, xs, target, nullptr);
    p(i) -= 2 * h;
    u.set_parameters(p);
    const double fm = composite_loss(u, pair.coarse, xs, target, nullptr);
    const double fd = (fp - fm) / (2 * h);
    EXPECT_NEAR(g(i), fd, 1e-4 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(Upscaler, SineTargetThroughLinearCoarseModel) {
  const EmulatorPair pair = sin_pair();
  const Eigen::MatrixXd x = grid_1d(200, 0.0, 1.0);
  const Upscaler u = train_upscaler(pair, x);
  EXPECT_LT(composite_rmse(pair, u, x), 0.02);
  const Eigen::MatrixXd ux = u(x);
  double e2 = 0.0;
  for (int j = 0; j < 200; ++j) e2 += std::pow(ux(0, j) - std::sin(M_PI * x(0, j)), 2);
  EXPECT_LT(std::sqrt(e2 / 200), 0.02);
  Eigen::VectorXd lo(1), hi(1);
  lo << -0.1;
  hi << 1.1;
  EXPECT_LE(composite_rmse(pair, u, x), constant_baseline_rmse(pair, x, best_constant_parameter(pair, x, lo, hi)));
}

TEST(Upscaler, EmulatorsFrozenAndTrainingDeterministic) {
  const EmulatorPair pair = sin_pair();
  const Eigen::VectorXd fine0 = pair.fine.parameters(), coarse0 = pair.coarse.parameters();
  const Eigen::MatrixXd x = grid_1d(50, 0.0, 1.0);
  UpscalerConfig cfg;
  cfg.net.epochs = 300;
  const Upscaler a = train_upscaler(pair, x, cfg);
  const Upscaler b = train_upscaler(pair, x, cfg);
  EXPECT_EQ(pair.fine.parameters(), fine0);
  EXPECT_EQ(pair.coarse.parameters(), coarse0);
  EXPECT_EQ(a.net.parameters(), b.net.parameters());
  EXPECT_EQ(a.composite_rmse, b.composite_rmse);
  cfg.net.seed = 1;
  EXPECT_NE(train_upscaler(pair, x, cfg).net.parameters(), a.net.parameters());
}

TEST(Upscaler, IdenticalEmulatorsGiveIdentity) {
  Rng rng(2);
  Eigen::MatrixXd x(2, 300), y(2, 300);
  for (int j = 0; j < 300; ++j) {
    x(0, j) = uniform01(rng);
    x(1, j) = uniform01(rng);
    y(0, j) = x(0, j) + 0.2 * x(0, j) * x(0, j);
    y(1, j) = x(1, j) + 0.3 * x(0, j);
  }
  const EmulatorPair pair = train_emulators(x, y, x, y);
  const Upscaler u = train_upscaler(pair, x);
  const Eigen::MatrixXd d = u(x) - x;
  EXPECT_LT(d.colwise().norm().mean(), 0.05);
}

TEST(Upscaler, InputDimensionMismatch) {
  const EmulatorPair pair = sin_pair();
  EXPECT_THROW(train_upscaler(pair, Eigen::MatrixXd::Random(2, 10)), ArgumentError);
  EXPECT_THROW(train_upscaler(pair, Eigen::MatrixXd::Random(1, 1)), ArgumentError);
}

TEST(Adsorption, ObservableLimits) {
  EXPECT_DOUBLE_EQ(adsorption_observable(0.4, 1.0, 5.0, 0.0), 0.4);
  EXPECT_NEAR(adsorption_observable(0.4, 1.0, 500.0), 0.4, 1e-40);
  EXPECT_DOUBLE_EQ(adsorption_observable(0.5, 4.0, 5.0, 2.0, 5.0), 0.5 * (1.0 + std::exp(-1.0)));
}

TEST(Adsorption, NoAdsorptionUpscalesToBulkDensity) {
  AdsorptionConfig cfg;
  cfg.c1 = 0.0;
  const AdsorptionReport r = synthetic_adsorption_demo(cfg);
  const Eigen::MatrixXd p = r.upscaler(r.x);
  const double err = (p.row(0) - r.x.row(0)).cwiseAbs().mean();
  EXPECT_LT(err, 0.02 * (cfg.rho_hi - cfg.rho_lo));
}

TEST(Adsorption, DemoBeatsConstantAndFitsObservable) {
  const AdsorptionReport r = synthetic_adsorption_demo(AdsorptionConfig{});
  EXPECT_LT(r.composite_rmse, 0.05 * r.observable_range);
  EXPECT_LT(r.composite_rmse, r.constant_rmse);
  EXPECT_LT(r.direct_rmse, 1e-6);
}
