#include <gtest/gtest.h>

#include <cmath>

#include "pmeval/bins.hpp"
#include "pmeval/error.hpp"
#include "test_support.hpp"

using namespace pmeval;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no pmeval::Error thrown";
  return ErrorCode::ConfigError;
}

}  // namespace

TEST(Partition, ThreeEdgesGiveThreeBins) {
  const auto p = make_partition({0, 2, 4});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.lower(0), 0);
  EXPECT_EQ(p.upper(0), 2);
  EXPECT_EQ(p.upper(1), 4);
  EXPECT_TRUE(std::isinf(p.upper(2)));
  EXPECT_FALSE(p.bounded(2));
  EXPECT_EQ(p.width(1), 2);
  EXPECT_EQ(p.width(2), 0);
}

TEST(Partition, SingleEdgeIsOneOpenBin) {
  const auto p = make_partition({5});
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(p.bin_of(5), 0u);
  EXPECT_EQ(p.bin_of(1e9), 0u);
}

TEST(Partition, RejectsRepeatedAndEmptyEdges) {
  EXPECT_EQ(code_of([] { make_partition({3, 3}); }), ErrorCode::NonMonotonicEdges);
  EXPECT_EQ(code_of([] { make_partition({3, 1}); }), ErrorCode::NonMonotonicEdges);
  EXPECT_EQ(code_of([] { make_partition({}); }), ErrorCode::EmptyEdges);
  EXPECT_EQ(code_of([] { make_partition({0, NAN}); }), ErrorCode::NonMonotonicEdges);
}

TEST(OutcomeMapping, EdgeValueGoesToHigherBin) {
  const auto p = make_partition({0, 2, 4});
  EXPECT_EQ(map_outcome_to_bin(2.0, p), 1u);
  EXPECT_EQ(map_outcome_to_bin(1.9, p), 0u);
  EXPECT_EQ(map_outcome_to_bin(100.0, p), 2u);
  EXPECT_EQ(map_outcome_to_bin(0.0, p), 0u);
  EXPECT_EQ(code_of([&] { map_outcome_to_bin(-0.1, p); }), ErrorCode::BelowPartition);
}

TEST(OutcomeMapping, MonotoneAndEdgeExactOnRandomPartitions) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = test::random_partition(rng, 2 + trial % 9);
    for (std::size_t i = 1; i < p.size(); ++i) EXPECT_EQ(p.bin_of(p.edges()[i]), i);
    std::uniform_real_distribution<double> u(0.0, p.edges().back() * 1.2);
    std::vector<double> xs(50);
    for (auto& x : xs) x = u(rng);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_LE(p.bin_of(xs[i - 1]), p.bin_of(xs[i]));
  }
}

TEST(Normalize, Examples) {
  const auto p = make_partition({0, 1, 2});
  const std::vector<double> a{0.2, 0.2, 0.6};
  auto d = normalize(a, p);
  EXPECT_NEAR(d[0], 0.2, 1e-15);
  EXPECT_NEAR(d[2], 0.6, 1e-15);
  const std::vector<double> b{0.5, 0.5, 1.0};
  d = normalize(b, p);
  EXPECT_DOUBLE_EQ(d[0], 0.25);
  EXPECT_DOUBLE_EQ(d[1], 0.25);
  EXPECT_DOUBLE_EQ(d[2], 0.5);
  const std::vector<double> zero{0, 0, 0};
  EXPECT_EQ(code_of([&] { normalize(zero, p); }), ErrorCode::DegenerateMass);
  const std::vector<double> neg{-0.1, 0.5, 0.6};
  EXPECT_EQ(code_of([&] { normalize(neg, p); }), ErrorCode::NegativeWeight);
  const std::vector<double> short_w{0.5, 0.5};
  EXPECT_EQ(code_of([&] { normalize(short_w, p); }), ErrorCode::InvalidDistribution);
}

TEST(Normalize, FloorIsInclusive) {
  const auto p = make_partition({0, 1});
  const std::vector<double> at_floor{0.025, 0.025};
  EXPECT_NO_THROW(normalize(at_floor, p));
  const std::vector<double> below{0.02, 0.02};
  EXPECT_EQ(code_of([&] { normalize(below, p); }), ErrorCode::DegenerateMass);
}

TEST(Normalize, IdempotentAndSumsToOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = test::random_partition(rng, 1 + trial % 12);
    std::vector<double> w(p.size());
    for (auto& x : w) x = u(rng);
    w[0] += 0.05;
    const auto once = normalize(w, p);
    const auto twice = normalize(once.probs(), p);
    EXPECT_NEAR(compensated_sum(once.probs()), 1.0, 1e-12);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-12);
  }
}

TEST(Distribution, ValidatesMass) {
  const auto p = make_partition({0, 1});
  EXPECT_EQ(code_of([&] { PredictiveDistribution(p, {0.5, 0.6}); }), ErrorCode::InvalidDistribution);
  EXPECT_EQ(code_of([&] { PredictiveDistribution(p, {1.2, -0.2}); }), ErrorCode::InvalidDistribution);
  EXPECT_EQ(code_of([&] { PredictiveDistribution(p, {1.0}); }), ErrorCode::InvalidDistribution);
  EXPECT_NO_THROW(PredictiveDistribution(p, {0.5, 0.5 + 5e-10}));
}

TEST(Cdf, Examples) {
  const auto p = make_partition({0, 1, 2});
  auto f = cdf(PredictiveDistribution(p, {0.1, 0.3, 0.6}));
  EXPECT_NEAR(f[0], 0.1, 1e-15);
  EXPECT_NEAR(f[1], 0.4, 1e-15);
  EXPECT_EQ(f[2], 1.0);
  f = cdf(PredictiveDistribution(p, {1, 0, 0}));
  EXPECT_EQ(f, (std::vector<double>{1, 1, 1}));
  f = cdf(PredictiveDistribution(p, {0, 0, 1}));
  EXPECT_EQ(f, (std::vector<double>{0, 0, 1}));
}

TEST(Cdf, DifferencingRecoversProbs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto part = test::random_partition(rng, 1 + trial % 15);
    const auto d = test::random_distribution(rng, part);
    const auto f = cdf(d);
    EXPECT_NEAR(f.back(), 1.0, 1e-12);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double back = i == 0 ? f[0] : f[i] - f[i - 1];
      EXPECT_NEAR(back, d[i], 1e-12);
      if (i > 0) EXPECT_GE(f[i], f[i - 1]);
    }
  }
}

TEST(CompensatedSum, OrderIndependentBeyondNaiveSum) {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(compensated_sum(v), 2.0);
}
