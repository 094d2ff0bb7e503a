#include <gtest/gtest.h>

#include "scalebridge/mixing.hpp"

using namespace scalebridge;

TEST(Mixing, ZeroDiffusionLeavesStateUnchanged) {
  const MixingState s = interface_state(32, 0.1, 1e23, 0.0, 0.0, 1e22, 100.0);
  const std::vector<double> d(32, 0.0);
  const MixingState next = coarse_step(s, d, 5.0);
  EXPECT_EQ(next.n1, s.n1);
  EXPECT_EQ(next.n2, s.n2);
  EXPECT_EQ(next.step, 1);
  EXPECT_DOUBLE_EQ(next.t, 5.0);
}

TEST(Mixing, UniformStateIsStationary) {
  const MixingState s = interface_state(16, 1.0, 2e23, 1e22, 2e23, 1e22, 50.0);
  std::vector<double> d(16);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.5 + 0.1 * static_cast<double>(i);
  const MixingState next = coarse_step(s, d, stable_dt(1.0, d));
  EXPECT_EQ(next.n1, s.n1);
  EXPECT_EQ(next.n2, s.n2);
}

TEST(Mixing, ConstantDiffusionMatchesErfProfile) {
  const std::size_t m = 200;
  const double dx = 1.0, diff = 1.0, dt = 0.4, nl = 1.0, nr = 0.2;
  MixingState s = interface_state(m, dx, nl, 0.0, nr, 0.0, 10.0);
  const std::vector<double> d(m, diff);
  for (int k = 0; k < 100; ++k) s = coarse_step(s, d, dt);
  const double x0 = static_cast<double>(m / 2) * dx, mean = 0.5 * (nl + nr);
  double err2 = 0.0, dev2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * dx;
    const double exact = nr + 0.5 * (nl - nr) * std::erfc((x - x0) / (2.0 * std::sqrt(diff * s.t)));
    err2 += (s.n1[i] - exact) * (s.n1[i] - exact);
    dev2 += (exact - mean) * (exact - mean);
  }
  EXPECT_LT(std::sqrt(err2 / dev2), 0.02);
}

TEST(MixingProperty, MassConservedAndNonNegative) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 8 + rng() % 100;
    MixingState s = interface_state(m, 1e-4, 1e22 * (1 + 9 * uniform01(rng)), 1e20 * uniform01(rng),
                                    1e20 * uniform01(rng), 1e22 * (1 + 9 * uniform01(rng)), 100.0);
    std::vector<double> d(m);
    for (double& v : d) v = std::pow(10.0, -6 + 3 * uniform01(rng));
    const double m1 = s.total_n1(), m2 = s.total_n2();
    const double dt = stable_dt(s.dx, d) * uniform01(rng);
    for (int k = 0; k < 50; ++k) {
      s = coarse_step(s, d, dt);
      ASSERT_NEAR(s.total_n1(), m1, 1e-10 * m1);
      ASSERT_NEAR(s.total_n2(), m2, 1e-10 * m2);
      for (std::size_t i = 0; i < m; ++i) {
        ASSERT_GE(s.n1[i], 0.0);
        ASSERT_GE(s.n2[i], 0.0);
      }
    }
  }
}

TEST(Mixing, OversizedStepRejected) {
  const MixingState s = interface_state(10, 0.5, 1.0, 0.0, 0.0, 1.0, 10.0);
  const std::vector<double> d(10, 2.0);
  const double limit = stable_dt(0.5, d);
  EXPECT_DOUBLE_EQ(limit, 0.05);
  EXPECT_NO_THROW(coarse_step(s, d, limit));
  try {
    coarse_step(s, d, 1.01 * limit);
    FAIL() << "expected StepSizeError";
  } catch (const StepSizeError& e) {
    EXPECT_DOUBLE_EQ(e.dt_max(), limit);
  }
}

TEST(Mixing, InvalidInputs) {
  EXPECT_THROW(interface_state(7, 1.0, 1, 0, 0, 1, 10), ArgumentError);
  EXPECT_THROW(interface_state(8, 0.0, 1, 0, 0, 1, 10), ArgumentError);
  EXPECT_THROW(interface_state(8, 1.0, -1, 0, 0, 1, 10), ArgumentError);
  const MixingState s = interface_state(8, 1.0, 1, 0, 0, 1, 10);
  EXPECT_THROW(coarse_step(s, std::vector<double>(7, 1.0), 0.1), ArgumentError);
  EXPECT_THROW(coarse_step(s, std::vector<double>(8, NAN), 0.1), ArgumentError);
}

TEST(Mixing, ClosureInputLayout) {
  const MixingState s = interface_state(8, 1.0, 3e22, 4e22, 5e22, 6e22, 75.0, 1.0, 18.0);
  EXPECT_EQ(s.closure_input(0), (std::vector<double>{3e22, 4e22, 75.0, 1.0, 18.0}));
  EXPECT_EQ(s.closure_input(7), (std::vector<double>{5e22, 6e22, 75.0, 1.0, 18.0}));
}
