#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmeval/combination.hpp"
#include "pmeval/error.hpp"
#include "test_support.hpp"

using namespace pmeval;

namespace {

// Mean Brier is a*alpha^2 + b*alpha + c; minimize over [0,1].
double quadratic_minimizer(const std::vector<PairedEvent>& events) {
  double a = 0.0, b = 0.0, w = 0.0;
  for (const auto& e : events) {
    for (std::size_t i = 0; i < e.a.size(); ++i) {
      const double d = e.a[i] - e.b[i];
      const double r = e.b[i] - (i == e.outcome_bin ? 1.0 : 0.0);
      a += e.weight * d * d;
      b += e.weight * 2.0 * d * r;
    }
    w += e.weight;
  }
  if (a <= 0.0) return 1.0;
  return std::clamp(-b / (2.0 * a), 0.0, 1.0);
}

}  // namespace

TEST(OptimizeAlpha, IdenticalForecastsTieToOne) {
  const auto part = make_partition({0, 1, 2});
  const PredictiveDistribution p(part, {0.2, 0.5, 0.3});
  const std::vector<PairedEvent> events{{p, p, 1}, {p, p, 2}};
  for (const Metric m : kAllMetrics) {
    const auto c = optimize_alpha(events, m);
    EXPECT_EQ(c.alpha_star, 1.0);
    EXPECT_EQ(c.alphas.size(), 101u);
    EXPECT_EQ(c.alphas.front(), 0.0);
    EXPECT_EQ(c.alphas.back(), 1.0);
  }
}

TEST(OptimizeAlpha, DominantChallengerGetsAllWeight) {
  const auto part = make_partition({0, 1, 2});
  const std::vector<PairedEvent> events{
      {PredictiveDistribution::point_mass(part, 0), PredictiveDistribution::point_mass(part, 2), 2},
      {PredictiveDistribution::point_mass(part, 2), PredictiveDistribution::point_mass(part, 1), 1}};
  const auto c = optimize_alpha(events, Metric::Brier);
  EXPECT_EQ(c.alpha_star, 0.0);
  EXPECT_EQ(c.best_score, 0.0);
}

TEST(OptimizeAlpha, HandWorkedQuadratic) {
  // Event 1: a=[1,0], b=[0,1], y=0. Event 2: a=[0.5,0.5], b=[0,1], y=1.
  // Mean Brier = (2(1-alpha)^2 + 2(alpha/2)^2)/2 = (1-alpha)^2 + alpha^2/4, minimized at 0.8.
  const auto part = make_partition({0, 1});
  const std::vector<PairedEvent> events{
      {PredictiveDistribution(part, {1, 0}), PredictiveDistribution(part, {0, 1}), 0},
      {PredictiveDistribution(part, {0.5, 0.5}), PredictiveDistribution(part, {0, 1}), 1}};
  const auto c = optimize_alpha(events, Metric::Brier);
  EXPECT_NEAR(c.alpha_star, 0.8, 1e-12);
  EXPECT_NEAR(c.best_score, 0.04 + 0.16, 1e-12);
}

TEST(OptimizeAlpha, MatchesQuadraticOracle) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PairedEvent> events;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t e = 0; e < n; ++e) {
      const auto part = test::random_partition(rng, 2 + rng() % 6);
      events.push_back(
          {test::random_distribution(rng, part), test::random_distribution(rng, part), rng() % part.size(),
           0.5 + static_cast<double>(rng() % 4)});
    }
    const double want = quadratic_minimizer(events);
    const auto c = optimize_alpha(events, Metric::Brier);
    EXPECT_LE(std::abs(c.alpha_star - want), 0.01 + 1e-12) << trial;
  }
}

TEST(OptimizeAlpha, CurveIsMeanOfMixtureScores) {
  std::mt19937_64 rng(3);
  const auto part = test::random_partition(rng, 5);
  std::vector<PairedEvent> events;
  for (int e = 0; e < 4; ++e) {
    events.push_back({test::random_distribution(rng, part), test::random_distribution(rng, part), rng() % 5});
  }
  for (const Metric m : kAllMetrics) {
    const auto c = optimize_alpha(events, m, 0.25);
    ASSERT_EQ(c.alphas.size(), 5u);
    for (std::size_t k = 0; k < c.alphas.size(); ++k) {
      double total = 0.0;
      for (const auto& e : events) {
        std::vector<double> q(5);
        for (std::size_t i = 0; i < 5; ++i) q[i] = c.alphas[k] * e.a[i] + (1 - c.alphas[k]) * e.b[i];
        total += score(m, q, part, e.outcome_bin);
      }
      EXPECT_NEAR(c.mean_scores[k], total / 4.0, 1e-12);
    }
    const auto best = std::min_element(c.mean_scores.begin(), c.mean_scores.end());
    EXPECT_NEAR(c.best_score, *best, 1e-12);
  }
}

TEST(OptimizeAlpha, Errors) {
  const auto part = make_partition({0, 1});
  const PredictiveDistribution p(part, {0.5, 0.5});
  const std::vector<PairedEvent> one{{p, p, 0}};
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code([] { optimize_alpha({}, Metric::Brier); }), ErrorCode::EmptyEvents);
  EXPECT_EQ(code([&] { optimize_alpha(one, Metric::Brier, 0.3); }), ErrorCode::InvalidGrid);
  EXPECT_EQ(code([&] { optimize_alpha(one, Metric::Brier, 0.0); }), ErrorCode::InvalidGrid);
  const std::vector<PairedEvent> mismatched{{p, PredictiveDistribution(make_partition({0, 2}), {0.5, 0.5}), 0}};
  EXPECT_EQ(code([&] { optimize_alpha(mismatched, Metric::Brier); }), ErrorCode::InvalidDistribution);
}
