#include <gtest/gtest.h>

#include <numeric>

#include "ficoco/compress.hpp"
#include "ficoco/correlate.hpp"
#include "ficoco/errors.hpp"
#include "support.hpp"

using namespace ficoco;
using namespace ficoco::testing;

TEST(CorrelationV, SliceOfVisualBlock) {
  const auto a = Matrix::from_rows({{.6, .3, .1}, {.1, .6, .3}, {.2, .2, .6}});
  const auto c = correlation_v(a, {{1}, {0, 2}});
  EXPECT_EQ(c, Matrix::from_rows({{.1, .3}}));
}

TEST(CorrelationV, EmptySourceGivesEmptyMatrix) {
  const auto c = correlation_v(Matrix(3, 3, 1.0 / 3), {{}, {0, 1, 2}});
  EXPECT_EQ(c.rows(), 0u);
  EXPECT_EQ(c.cols(), 3u);
}

TEST(CorrelationL, GammaOneOnBidirectionalBlockIsCorrelationV) {
  RandomStream rng(8);
  const auto a = stochastic(rng, 6);
  const SourceTargetSplit split{{1, 4}, {0, 2, 3, 5}};
  EXPECT_EQ(correlation_l(a, uniform_block(rng, 3, 6), split, 1.0, false), correlation_v(a, split));
}

TEST(CorrelationL, GammaZeroBridge) {
  const auto a_tv = Matrix::from_rows({{.4, .1}, {.2, .3}});
  const auto c = correlation_l(Matrix::from_rows({{1, 0}, {.5, .5}}), a_tv, {{0}, {1}}, 0.0);
  EXPECT_NEAR(c(0, 0), 0.05, 1e-15);
}

TEST(CorrelationL, DisjointTextAnchorsGiveZeroBridge) {
  const auto a_tv = Matrix::from_rows({{.9, 0}, {0, .9}});
  const auto c = correlation_l(Matrix::from_rows({{1, 0}, {.5, .5}}), a_tv, {{0}, {1}}, 0.0);
  EXPECT_EQ(c(0, 0), 0.0);
}

TEST(CorrelationL, CausalDirectTermIsSymmetrised) {
  // Source 0 precedes target 1, so A[0,1] is masked; A[1,0] carries the pair.
  const auto a = Matrix::from_rows({{1, 0}, {.7, .3}});
  const auto c = correlation_l(a, Matrix(1, 2, 0.0), {{0}, {1}}, 1.0);
  EXPECT_DOUBLE_EQ(c(0, 0), 0.7);
}

TEST(CorrelationL, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomStream rng(seed);
    const std::size_t n = 2 + rng.below(20), m = 1 + rng.below(6);
    const auto a = stochastic(rng, n, true);
    const auto t = uniform_block(rng, m, n);
    const auto split = select_discarded(uniform_vector(rng, n, 0, 1), 1 + rng.below(n - 1));
    const double gamma = rng.uniform();
    const auto ref = oracle::correlation_l(to_mat(a), to_mat(t), split.source, split.target, gamma, true);
    EXPECT_LE(max_abs_diff(correlation_l(a, t, split, gamma), ref), 1e-14);
  }
}

TEST(CorrelationL, NoTextIsAnError) {
  EXPECT_THROW(correlation_l(Matrix(2, 2, .5), Matrix(0, 2), {{0}, {1}}, 0.5), StageError);
}

TEST(Quantile, InterpolatedExample) {
  const std::vector<double> row{0.1, 0.3, 0.6};
  EXPECT_DOUBLE_EQ(quantile(row, 0.5), 0.3);
  EXPECT_DOUBLE_EQ(quantile(std::vector<double>{0.6, 0.1, 0.3}, 0.5), 0.3);
}

TEST(Quantile, EpsilonOneIsRowMax) {
  const std::vector<double> row{0.25, 0.9, 0.1, 0.9 - 1e-17};
  EXPECT_EQ(quantile(row, 1.0), 0.9);
}

TEST(Quantile, ConstantRowGivesConstant) {
  const auto plan = assignments(Matrix(1, 4, 0.2), thresholds(Matrix(1, 4, 0.2), 0.998));
  EXPECT_EQ(plan.tau[0], 0.2);
  EXPECT_EQ(plan.targets_of[0], (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Quantile, NeverAboveMaxAndMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomStream rng(seed);
    const auto c = uniform_block(rng, 3, 1 + rng.below(40));
    for (const double eps : {0.5, 0.9, 0.998, 1.0, 1e-9}) {
      const auto tau = thresholds(c, eps);
      EXPECT_EQ(tau, oracle::thresholds(to_mat(c), eps));
      for (std::size_t r = 0; r < c.rows(); ++r) {
        double peak = c(r, 0);
        for (const double v : c.row(r)) peak = std::max(peak, v);
        EXPECT_LE(tau[r], peak);
      }
    }
  }
}

TEST(Quantile, BadArguments) {
  EXPECT_THROW(quantile(std::vector<double>{}, 0.5), StageError);
  EXPECT_THROW(quantile(std::vector<double>{1.0}, 0.0), StageError);
}

TEST(Assignments, NormalisedWeights) {
  const auto plan = assignments(Matrix::from_rows({{0.1, 0.3, 0.6}}), {0.3});
  EXPECT_EQ(plan.targets_of[0], (std::vector<std::size_t>{1, 2}));
  EXPECT_NEAR(plan.weights[0][0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(plan.weights[0][1], 2.0 / 3, 1e-15);
  EXPECT_EQ(plan.alpha(0, 0), 0.0);
  EXPECT_EQ(plan.alpha(0, 2), plan.weights[0][1]);
}

TEST(Assignments, SinglePreservedTokenTakesEverything) {
  const auto c = Matrix::from_rows({{0.2}, {0.0}, {0.7}});
  const auto plan = assignments(c, thresholds(c, 0.998));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(plan.targets_of[i], (std::vector<std::size_t>{0}));
    EXPECT_EQ(plan.weights[i][0], 1.0);
  }
  EXPECT_EQ(plan.sources_of[0], (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Assignments, ZeroRowFallsBackToUniform) {
  const auto plan = assignments(Matrix(1, 4, 0.0), {0.0});
  for (const double w : plan.weights[0]) EXPECT_EQ(w, 0.25);
}

TEST(Assignments, ManyToManyTranspose) {
  const auto c = Matrix::from_rows({{0.1, 0.9}, {0.2, 0.8}});
  const auto plan = assignments(c, thresholds(c, 0.998));
  EXPECT_EQ(plan.sources_of[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(plan.sources_of[0].empty());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream rng(seed);
    const auto m = uniform_block(rng, 1 + rng.below(8), 1 + rng.below(8));
    const auto p = assignments(m, thresholds(m, 0.5));
    const auto ref = oracle::assignments(to_mat(m), oracle::thresholds(to_mat(m), 0.5));
    EXPECT_EQ(p.targets_of, ref.targets_of);
    EXPECT_EQ(p.sources_of, ref.sources_of);
    for (std::size_t i = 0; i < p.num_sources(); ++i) {
      for (std::size_t j = 0; j < p.num_targets(); ++j) EXPECT_NEAR(p.alpha(i, j), ref.alpha[i][j], 1e-15);
    }
  }
}

TEST(Assignments, NonEmptyAndNestedInEpsilon) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    const auto c = uniform_block(rng, 1, 1 + rng.below(30));
    const auto loose = assignments(c, thresholds(c, 0.4));
    const auto tight = assignments(c, thresholds(c, 0.95));
    ASSERT_FALSE(tight.targets_of[0].empty());
    for (const auto j : tight.targets_of[0]) {
      EXPECT_TRUE(std::binary_search(loose.targets_of[0].begin(), loose.targets_of[0].end(), j));
    }
  }
}

TEST(Assignments, ScaleInvariantWeights) {
  RandomStream rng(17);
  const auto c = uniform_block(rng, 4, 9);
  Matrix scaled = c;
  for (auto& v : scaled.data()) v *= 8.0;
  const auto a = assignments(c, thresholds(c, 0.7));
  const auto b = assignments(scaled, thresholds(scaled, 0.7));
  EXPECT_EQ(a.targets_of, b.targets_of);
  for (std::size_t i = 0; i < a.num_sources(); ++i) {
    for (std::size_t k = 0; k < a.weights[i].size(); ++k) EXPECT_NEAR(a.weights[i][k], b.weights[i][k], 1e-15);
  }
}

TEST(FixedK, ZeroPrunesAndLeavesTargetsUntouched) {
  RandomStream rng(3);
  const auto c = uniform_block(rng, 3, 4);
  const auto plan = fixed_k_assignments(c, 0);
  for (const auto& j : plan.targets_of) EXPECT_TRUE(j.empty());
  const auto targets = gaussian(rng, 4, 5);
  EXPECT_EQ(weighted_compress(targets, gaussian(rng, 3, 5), plan).updated_targets, targets);
}

TEST(FixedK, OneIsArgmax) {
  const auto plan = fixed_k_assignments(Matrix::from_rows({{0.1, 0.3, 0.6}}), 1);
  EXPECT_EQ(plan.targets_of[0], (std::vector<std::size_t>{2}));
  EXPECT_EQ(plan.weights[0], (std::vector<double>{1.0}));
}

TEST(FixedK, TopKWithTies) {
  const auto plan = fixed_k_assignments(Matrix::from_rows({{0.5, 0.2, 0.5, 0.5}}), 2);
  EXPECT_EQ(plan.targets_of[0], (std::vector<std::size_t>{0, 2}));
}

TEST(FixedK, KAboveTargetCountIsAnError) {
  EXPECT_THROW(fixed_k_assignments(Matrix(1, 2, 0.5), 3), StageError);
}

TEST(ManyToOne, SharedArgmaxTarget) {
  const auto plan = many_to_one_assignments(Matrix::from_rows({{0.1, 0.9}, {0.3, 0.4}}));
  EXPECT_EQ(plan.sources_of[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(plan.weights[0], (std::vector<double>{1.0}));
  EXPECT_EQ(plan.weights[1], (std::vector<double>{1.0}));
}

TEST(PruningPlan, EverySourceIsDropped) {
  const auto plan = pruning_plan(3, 0);
  EXPECT_EQ(plan.num_sources(), 3u);
  EXPECT_EQ(plan.num_targets(), 0u);
  for (const auto& j : plan.targets_of) EXPECT_TRUE(j.empty());
}
