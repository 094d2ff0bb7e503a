#include <gtest/gtest.h>

#include <filesystem>

#include "scalebridge/committee.hpp"
#include "scalebridge/sampling.hpp"

using namespace scalebridge;

namespace {

Dataset linear_data(std::size_t n) {
  const Domain d = Domain::box(3, 0, 1);
  Dataset data(d);
  for (const auto& x : latin_hypercube(d, n, 1)) data.add(truth_point(x, {1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]}));
  return data;
}

Committee constant_members(const std::vector<double>& values) {
  const Domain d = Domain::box(2, 0, 1);
  Committee c;
  c.output_scale = {1.0};
  for (double v : values) {
    Dataset data(d);
    for (const auto& x : latin_hypercube(d, 8, 2)) data.add(truth_point(x, {v}));
    c.members.push_back(Trainer::rbf(0.0).fit(data, 0));
  }
  return c;
}

}  // namespace

TEST(Committee, LinearTruthAcceptsFirstFiveAttempts) {
  CommitteeConfig cfg;
  const Committee c = build_committee(linear_data(100), Trainer::rbf(1e-10), cfg);
  EXPECT_EQ(c.size(), 5u);
  EXPECT_EQ(c.rejected_attempts, 0u);
  for (double r : c.calibration_scores) EXPECT_GT(r, 0.999);
}

TEST(Committee, WhiteNoiseFailsToBuild) {
  const Domain d = Domain::box(2, 0, 1);
  Dataset data(d);
  Rng rng(4);
  for (const auto& x : latin_hypercube(d, 200, 3)) data.add(truth_point(x, {standard_normal(rng)}));
  CommitteeConfig cfg;
  try {
    build_committee(data, Trainer::rbf(1e-10), cfg);
    FAIL() << "expected CommitteeBuildError";
  } catch (const CommitteeBuildError& e) {
    EXPECT_LT(e.best_r2(), 0.7);
    EXPECT_LT(e.accepted(), 5u);
  }
}

TEST(Committee, TooSmallCalibrationSplitRejected) {
  EXPECT_THROW(build_committee(linear_data(20), Trainer::rbf(1e-10), CommitteeConfig{}), ArgumentError);
}

TEST(Committee, IdenticalMembersHaveZeroSpread) {
  const auto p = committee_predict(constant_members({1.5, 1.5, 1.5}), std::vector<double>{0.3, 0.6});
  EXPECT_NEAR(p.mean[0], 1.5, 1e-12);
  EXPECT_NEAR(p.spread[0], 0.0, 1e-12);
  EXPECT_NEAR(p.quality, 0.0, 1e-12);
}

TEST(Committee, PopulationSpreadOfZeroToFour) {
  const auto p = committee_predict(constant_members({0, 1, 2, 3, 4}), std::vector<double>{0.4, 0.1});
  EXPECT_NEAR(p.mean[0], 2.0, 1e-9);
  EXPECT_NEAR(p.spread[0], std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(p.quality, std::sqrt(2.0), 1e-9);
}

TEST(Committee, ConfidenceBoundaries) {
  CommitteePrediction zero;
  zero.quality = 0.0;
  EXPECT_TRUE(is_confident(zero, 1e-12));
  EXPECT_TRUE(is_confident(zero, 0.0));
  CommitteePrediction some;
  some.quality = 1e-9;
  EXPECT_FALSE(is_confident(some, 0.0));
  EXPECT_THROW(is_confident(some, -1.0), ArgumentError);
}

TEST(CommitteeProperty, MeanBoundedSpreadPermutationInvariantGatingMonotone) {
  CommitteeConfig cfg;
  cfg.seed = 5;
  RosenbrockModel m(2);
  const Dataset data = evaluate_all(m, m.domain(), latin_hypercube(m.domain(), 120, 5));
  const Committee c = build_committee(data, Trainer::rbf(1e-10), cfg);
  Committee reversed = c;
  std::reverse(reversed.members.begin(), reversed.members.end());
  for (const auto& x : uniform_random(m.domain(), 200, 6)) {
    const auto p = committee_predict(c, x);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : c.members) {
      lo = std::min(lo, s.predict(x)[0]);
      hi = std::max(hi, s.predict(x)[0]);
    }
    EXPECT_GE(p.mean[0], lo - 1e-9 * std::abs(lo));
    EXPECT_LE(p.mean[0], hi + 1e-9 * std::abs(hi));
    EXPECT_TRUE(std::isfinite(p.spread[0]));
    EXPECT_NEAR(committee_predict(reversed, x).spread[0], p.spread[0], 1e-9 * (1 + p.spread[0]));
    for (double t1 : {0.0, 0.001, 0.01, 0.1})
      for (double t2 : {t1, 2 * t1, t1 + 0.05})
        if (is_confident(p, t1)) EXPECT_TRUE(is_confident(p, t2));
  }
}

TEST(CommitteeProperty, AcceptedMembersPassGate) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CommitteeConfig cfg;
    cfg.seed = seed;
    SyntheticClosureModel m;
    const Dataset data = evaluate_all(m, icf_domain(), latin_hypercube(icf_domain(), 150, seed));
    Trainer t = Trainer::rbf(1e-8);
    t.transform = TargetTransform::Log10;
    const Committee c = build_committee(data, t, cfg);
    ASSERT_EQ(c.calibration_scores.size(), c.size());
    for (double r : c.calibration_scores) EXPECT_GE(r, cfg.r2_threshold);
  }
}

TEST(Committee, DeterministicAndPoolIndependent) {
  CommitteeConfig cfg;
  cfg.seed = 8;
  TrainConfig net;
  net.hidden = {6};
  net.epochs = 150;
  const Dataset data = linear_data(120);
  const Committee a = build_committee(data, Trainer::network(net), cfg);
  const Committee b = build_committee(data, Trainer::network(net), cfg);
  EXPECT_TRUE(a == b);
  WorkerPool pool(3);
  const Committee c = build_committee(data, Trainer::network(net), cfg, &pool);
  EXPECT_TRUE(a == c);
}

TEST(Committee, SaveLoadRoundTrip) {
  const Committee c = build_committee(linear_data(100), Trainer::rbf(1e-10), CommitteeConfig{});
  const auto dir = std::filesystem::temp_directory_path() / "scalebridge_committee_test";
  std::filesystem::remove_all(dir);
  save_committee(dir, c);
  const Committee back = load_committee(dir);
  EXPECT_TRUE(back == c);
  std::filesystem::remove_all(dir);
}

TEST(Committee, FarExtrapolationIsNotConfident) {
  // Trained on T in [50, 100]; queried well above the box.
  const Domain sub({{1e22, 1e25}, {1e22, 1e25}, {50.0, 100.0}, {1.0, 18.0}, {1.0, 18.0}},
                   {true, true, false, true, true});
  SyntheticClosureModel m;
  const Dataset data = evaluate_all(m, sub, latin_hypercube(sub, 300, 2));
  Trainer t = Trainer::rbf(1e-8);
  t.transform = TargetTransform::Log10;
  const Committee c = build_committee(data, t, CommitteeConfig{});
  EXPECT_FALSE(is_confident(c, std::vector<double>{3e23, 3e23, 400.0, 1.0, 18.0}, 0.008));
}
