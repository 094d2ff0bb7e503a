#include <gtest/gtest.h>

#include "scalebridge/optimizer_sampling.hpp"
#include "scalebridge/sampling_ab.hpp"
#include "scalebridge/validity.hpp"

using namespace scalebridge;

namespace {

ValidityConfig rosenbrock_config(std::size_t window, std::uint64_t seed) {
  ValidityConfig v;
  v.tol = 5.0;
  v.window = window;
  v.test_points = 1024;
  v.seed = seed;
  return v;
}

}  // namespace

TEST(Validity, ConstantTruthConvergesAfterWindow) {
  auto truth = std::make_shared<FunctionModel>(2, 1, [](std::span<const double>) { return std::vector<double>{2.5}; });
  const Domain d = Domain::box(2, 0, 1);
  for (std::size_t w : {1u, 3u, 5u}) {
    UniformSampler s(truth, d, 3);
    ValidityConfig v;
    v.window = w;
    v.test_points = 64;
    const auto r = validity_loop(*truth, d, Trainer::rbf(1e-10), s, v);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.history.records.size(), w);
    for (const auto& rec : r.history.records) EXPECT_LT(rec.test_score, 1e-9);
  }
}

TEST(Validity, NoiseNeverConverges) {
  auto truth = std::make_shared<FunctionModel>(1, 1, [](std::span<const double> x) {
    return std::vector<double>{std::sin(1e4 * x[0]) * 100};
  });
  const Domain d = Domain::box(1, 0, 1);
  UniformSampler s(truth, d, 3);
  ValidityConfig v;
  v.tol = 1.0;
  v.max_iterations = 6;
  v.budget = 5;
  v.test_points = 200;
  const auto r = validity_loop(*truth, d, Trainer::rbf(1e-10), s, v);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.history.records.size(), 6u);
}

TEST(ValidityProperty, SmallerWindowStopsNoLater) {
  RosenbrockModel m(2);
  auto truth = std::make_shared<RosenbrockModel>(2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::size_t prev = 0;
    for (std::size_t w : {1u, 2u, 3u}) {
      SparsitySampler s(truth, m.domain(), seed);
      const auto r = validity_loop(m, m.domain(), Trainer::rbf(1e-10), s, rosenbrock_config(w, seed));
      ASSERT_TRUE(r.converged);
      EXPECT_GE(r.history.records.size(), prev);
      prev = r.history.records.size();
    }
  }
}

TEST(ValidityProperty, DatabaseGrowsAndRecordedScoreIsReproducible) {
  RosenbrockModel m(2);
  auto truth = std::make_shared<RosenbrockModel>(2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    UniformSampler s(truth, m.domain(), seed);
    const auto r = validity_loop(m, m.domain(), Trainer::rbf(1e-10), s, rosenbrock_config(3, seed));
    std::size_t evals = 0;
    for (std::size_t i = 0; i < r.history.records.size(); ++i) {
      evals += r.history.records[i].evals;
      if (i > 0) EXPECT_GE(r.history.records[i].db_size, r.history.records[i - 1].db_size);
    }
    EXPECT_EQ(evals, r.database.size());
    EXPECT_NEAR(average_model_error(r.surrogate, r.test_set), r.score, 1e-12 * (1 + r.score));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : r.history.records) best = std::min(best, rec.test_score);
    EXPECT_EQ(best, r.score);
  }
}

TEST(Validity, OptimizerScoresMostlyNonIncreasing) {
  RosenbrockModel m(2);
  auto truth = std::make_shared<RosenbrockModel>(2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    OptimizerDirectedSampler s(truth, m.domain(), ab_optimizer_defaults(), seed);
    const auto r = validity_loop(m, m.domain(), Trainer::rbf(1e-10), s, rosenbrock_config(3, seed));
    const auto& recs = r.history.records;
    ASSERT_GT(recs.size(), 1u);
    std::size_t ok = 0;
    for (std::size_t i = 1; i < recs.size(); ++i) ok += recs[i].test_score <= recs[i - 1].test_score;
    EXPECT_GE(static_cast<double>(ok) / static_cast<double>(recs.size() - 1), 0.8);
  }
}

TEST(Validity, RelativeChangeFloor) {
  EXPECT_DOUBLE_EQ(relative_change(10.0, 9.0, 1.0), 0.1);
  EXPECT_DOUBLE_EQ(relative_change(1e-6, 0.0, 0.5), 2e-6);
}

TEST(Validity, HistoryCsv) {
  ValidityHistory h;
  h.records.push_back({1, 20, 0.5, true, 20});
  std::ostringstream os;
  h.write_csv(os);
  EXPECT_EQ(os.str(), "iteration,db_size,test_score,saved,evals\n1,20,0.5,1,20\n");
}

TEST(Validity, BadConfig) {
  ValidityConfig v;
  v.window = 0;
  EXPECT_THROW(v.validate(), ArgumentError);
  v = {};
  v.tol = 0.0;
  EXPECT_THROW(v.validate(), ArgumentError);
}
