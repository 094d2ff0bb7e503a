#include <gtest/gtest.h>

#include <set>

#include "scalebridge/optimizer_sampling.hpp"
#include "scalebridge/sampling_ab.hpp"

using namespace scalebridge;

namespace {

double min_pairwise(const Domain& d, const std::vector<std::vector<double>>& xs) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      m = std::min(m, squared_distance(normalize(d, xs[i]), normalize(d, xs[j])));
  return std::sqrt(m);
}

// Every one of the n equal-width normalized strata holds exactly one point per axis.
void expect_stratified(const Domain& d, const std::vector<std::vector<double>>& xs) {
  const std::size_t n = xs.size();
  for (std::size_t k = 0; k < d.dims(); ++k) {
    std::vector<int> hits(n, 0);
    for (const auto& x : xs) {
      const double u = normalize(d, x)[k];
      const auto s = std::min<std::size_t>(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
      ++hits[s];
    }
    for (int h : hits) ASSERT_EQ(h, 1);
  }
}

}  // namespace

TEST(LatinHypercube, FourPointsOneDimension) {
  const Domain d = Domain::box(1, 0, 1);
  const auto xs = latin_hypercube(d, 4, 3);
  ASSERT_EQ(xs.size(), 4u);
  expect_stratified(d, xs);
}

TEST(LatinHypercube, LogScaledDomainStratifiedInNormalizedSpace) {
  expect_stratified(icf_domain(), latin_hypercube(icf_domain(), 1100, 11));
}

TEST(LatinHypercubeProperty, RandomSizesStratifiedAndInBounds) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dims = 1 + rng() % 6, n = 1 + rng() % 200;
    const Domain d = Domain::box(dims, -3, 5);
    const auto xs = latin_hypercube(d, n, rng());
    ASSERT_EQ(xs.size(), n);
    expect_stratified(d, xs);
    for (const auto& x : xs)
      for (double v : x) {
        ASSERT_GE(v, -3.0);
        ASSERT_LE(v, 5.0);
      }
  }
}

TEST(LatinHypercube, DeterministicPerSeed) {
  const Domain d = Domain::box(3, 0, 1);
  EXPECT_EQ(latin_hypercube(d, 50, 4), latin_hypercube(d, 50, 4));
  EXPECT_NE(latin_hypercube(d, 50, 4), latin_hypercube(d, 50, 5));
}

TEST(LatinHypercube, ZeroPointsRejected) {
  EXPECT_THROW(latin_hypercube(Domain::box(2, 0, 1), 0, 1), ArgumentError);
}

TEST(UniformRandom, InBoundsIncludingLogAxes) {
  const Domain d = icf_domain();
  for (const auto& x : uniform_random(d, 2000, 3))
    for (std::size_t k = 0; k < d.dims(); ++k) {
      ASSERT_GE(x[k], d.bounds()[k].lo);
      ASSERT_LE(x[k], d.bounds()[k].hi);
    }
}

TEST(Sparsity, FillsOppositeCorner) {
  const Domain d = Domain::box(2, 0, 1);
  std::vector<std::vector<double>> cluster;
  for (const auto& x : uniform_random(Domain::box(2, 0, 0.1), 30, 2)) cluster.push_back(x);
  const auto pick = sparsity_sample(d, cluster, 1, 100, 5);
  ASSERT_EQ(pick.size(), 1u);
  EXPECT_GT(pick[0][0] + pick[0][1], 1.0);
}

TEST(SparsityProperty, MoreSeparatedThanUniform) {
  const Domain d = Domain::box(2, 0, 1);
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double sp = min_pairwise(d, sparsity_sample(d, {}, 30, 300, seed));
    const double un = min_pairwise(d, uniform_random(d, 30, seed));
    if (sp > un) ++wins;
  }
  EXPECT_EQ(wins, 20);
}

TEST(Sparsity, CandidatePoolTooSmall) {
  const Domain d = Domain::box(2, 0, 1);
  EXPECT_THROW(sparsity_sample(d, {}, 10, 99, 1), ArgumentError);
  EXPECT_NO_THROW(sparsity_sample(d, {}, 10, 100, 1));
}

TEST(Sparsity, DistinctPicks) {
  const Domain d = Domain::box(3, 0, 1);
  const auto xs = sparsity_sample(d, {}, 40, 400, 9);
  std::set<std::vector<double>> unique(xs.begin(), xs.end());
  EXPECT_EQ(unique.size(), xs.size());
}

TEST(OptimizerSampling, ExactBudget) {
  auto truth = std::make_shared<RosenbrockModel>(3);
  for (std::size_t budget : {16u, 17u, 53u, 200u}) {
    const Dataset data = optimizer_directed_draw(truth->domain(), truth, 4, budget, NelderMeadConfig{}, 3);
    EXPECT_EQ(data.size(), budget);
  }
  EXPECT_THROW(optimizer_directed_draw(truth->domain(), truth, 4, 15, NelderMeadConfig{}, 3), ArgumentError);
}

TEST(OptimizerSampling, SingleSolverSpendsFirstSimplex) {
  auto truth = std::make_shared<RosenbrockModel>(4);
  OptimizerSamplerConfig oc;
  oc.k_solvers = 1;
  OptimizerDirectedSampler s(truth, truth->domain(), oc, 2);
  const auto pts = s.draw(Dataset(truth->domain()), 5);
  ASSERT_EQ(pts.size(), 5u);
  ASSERT_EQ(s.solvers().size(), 1u);
  EXPECT_EQ(s.solvers()[0].evaluations(), 5u);
  EXPECT_EQ(s.solvers()[0].iterations(), 0u);
}

TEST(OptimizerSampling, FirstStartsMatchUniformSampler) {
  auto truth = std::make_shared<RosenbrockModel>(2);
  OptimizerSamplerConfig oc;
  oc.k_solvers = 3;
  OptimizerDirectedSampler opt(truth, truth->domain(), oc, 12);
  UniformSampler uni(truth, truth->domain(), 12);
  const Dataset empty(truth->domain());
  const auto a = opt.draw(empty, 1);
  const auto b = uni.draw(empty, 3);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].x, b[0].x);
}

TEST(OptimizerSampling, ConcentratesNearMinimizer) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    AbTestConfig cfg;
    cfg.dims = 2;
    cfg.iterations = 5;
    cfg.budget = 40;
    cfg.test_points = 64;
    cfg.near_points = 64;
    cfg.seed = seed;
    const AbResult r = run_sampling_ab(cfg);
    EXPECT_GT(r.optimizer.near_fraction, 2 * r.uniform.near_fraction);
    EXPECT_EQ(r.optimizer.database.size(), 200u);
    EXPECT_EQ(r.uniform.database.size(), 200u);
  }
}
