#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmeval/arima.hpp"
#include "pmeval/error.hpp"
#include "oracles.hpp"

using namespace pmeval;

namespace {

std::vector<double> simulate(std::mt19937_64& rng, std::size_t n, double phi, double theta, double mu = 0.0) {
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> x(n);
  double prev = 0.0, prev_e = 0.0;
  for (std::size_t burn = 0; burn < 200 + n; ++burn) {
    const double eps = e(rng);
    const double v = phi * prev + eps + theta * prev_e;
    prev = v;
    prev_e = eps;
    if (burn >= 200) x[burn - 200] = mu + v;
  }
  return x;
}

}  // namespace

TEST(Arima, DifferenceAndIntegratedAr) {
  EXPECT_EQ(difference(std::vector<double>{1, 4, 9, 16}, 1), (std::vector<double>{3, 5, 7}));
  EXPECT_EQ(difference(std::vector<double>{1, 4, 9, 16}, 2), (std::vector<double>{2, 2}));
  EXPECT_TRUE(difference(std::vector<double>{1}, 1).empty());
  // (1 - 0.5B)(1 - B) = 1 - 1.5B + 0.5B^2
  EXPECT_EQ(integrated_ar(std::vector<double>{0.5}, 1), (std::vector<double>{1.5, -0.5}));
  EXPECT_EQ(integrated_ar(std::vector<double>{}, 2), (std::vector<double>{2.0, -1.0}));
}

TEST(Arima, Stationarity) {
  EXPECT_TRUE(is_stationary(std::vector<double>{0.5}));
  EXPECT_FALSE(is_stationary(std::vector<double>{1.0}));
  EXPECT_TRUE(is_stationary(std::vector<double>{1.2, -0.5}));
  EXPECT_FALSE(is_stationary(std::vector<double>{0.6, 0.5}));
  EXPECT_TRUE(is_stationary(std::vector<double>{}));
}

TEST(Arima, PsiWeights) {
  const auto ar1 = psi_weights(std::vector<double>{0.5}, std::vector<double>{}, 4);
  EXPECT_EQ(ar1, (std::vector<double>{1, 0.5, 0.25, 0.125}));
  const auto ma1 = psi_weights(std::vector<double>{}, std::vector<double>{0.4}, 3);
  EXPECT_EQ(ma1, (std::vector<double>{1, 0.4, 0}));
}

TEST(Arima, LikelihoodMatchesDenseEvaluation) {
  std::mt19937_64 rng(9);
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> models = {
      {{}, {}}, {{0.7}, {}}, {{}, {0.5}}, {{0.6}, {-0.3}}, {{1.1, -0.4}, {0.2}}, {{0.2}, {0.3, 0.25}}};
  for (const auto& [ar, ma] : models) {
    const auto w = simulate(rng, 80, ar.empty() ? 0.0 : ar[0] * 0.5, 0.2, 3.0);
    const double fast = arma_log_likelihood(w, ar, ma, 3.0, 1.7);
    const double slow = oracle::arma_log_likelihood(w, ar, ma, 3.0, 1.7);
    EXPECT_NEAR(fast, slow, 1e-8 * std::abs(slow));
  }
}

TEST(Arima, FittedAicMatchesDenseLikelihood) {
  std::mt19937_64 rng(21);
  const auto x = simulate(rng, 150, 0.6, 0.3, 10.0);
  for (const ArimaOrder order : {ArimaOrder{1, 0, 0}, ArimaOrder{0, 0, 1}, ArimaOrder{1, 0, 1}, ArimaOrder{2, 1, 1}}) {
    const auto m = fit_arima(x, order);
    const auto w = difference(x, order.d);
    const double ll = oracle::arma_log_likelihood(w, m.ar, m.ma, m.intercept, m.sigma2);
    EXPECT_NEAR(m.aic, 2.0 * (order.p + order.q + 2) - 2.0 * ll, 1e-6);
  }
}

TEST(Arima, RecoversAr1Coefficient) {
  std::mt19937_64 rng(4);
  const auto x = simulate(rng, 2000, 0.8, 0.0, 5.0);
  const auto m = fit_arima(x, {1, 0, 0});
  EXPECT_NEAR(m.ar[0], 0.8, 0.04);
  EXPECT_NEAR(m.intercept, 5.0, 0.4);
  EXPECT_NEAR(m.sigma2, 1.0, 0.1);
}

TEST(Arima, AutoSelectsDifferencingForRandomWalk) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> x{0.0};
  for (int i = 0; i < 400; ++i) x.push_back(x.back() + e(rng));
  EXPECT_EQ(fit_auto_arima(x).order.d, 1);
  EXPECT_EQ(fit_auto_arima(simulate(rng, 400, 0.3, 0.0)).order.d, 0);
}

TEST(Arima, ConstantSeriesUsesVarianceFloor) {
  const std::vector<double> x(40, 7.0);
  const auto m = fit_auto_arima(x);
  EXPECT_EQ(m.order, (ArimaOrder{0, 0, 0}));
  EXPECT_EQ(m.sigma2, 1e-8);
  EXPECT_EQ(m.intercept, 7.0);
  const auto f = arima_forecast(m, x, 3);
  for (int h = 0; h < 3; ++h) {
    EXPECT_EQ(f.mean[h], 7.0);
    EXPECT_EQ(f.variance[h], 1e-8);
  }
}

TEST(Arima, Errors) {
  EXPECT_THROW(fit_auto_arima(std::vector<double>(10, 1.0)), Error);
  std::vector<double> bad(40, 1.0);
  bad[5] = std::nan("");
  try {
    fit_auto_arima(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFinite);
  }
  try {
    fit_auto_arima(std::vector<double>(10, 1.0));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
}

TEST(ArimaForecast, WhiteNoise) {
  ArimaModel m;
  m.intercept = 3.5;
  m.sigma2 = 2.0;
  const auto f = arima_forecast(m, std::vector<double>{1, 9, 4}, 4);
  for (int h = 0; h < 4; ++h) {
    EXPECT_DOUBLE_EQ(f.mean[h], 3.5);
    EXPECT_DOUBLE_EQ(f.variance[h], 2.0);
  }
}

TEST(ArimaForecast, Ar1ClosedForm) {
  ArimaModel m;
  m.order = {1, 0, 0};
  m.ar = {0.7};
  m.intercept = 10.0;
  m.sigma2 = 1.5;
  const std::vector<double> x{9, 12, 11, 14};
  const auto f = arima_forecast(m, x, 5);
  for (int h = 1; h <= 5; ++h) {
    EXPECT_NEAR(f.mean[h - 1], 10.0 + std::pow(0.7, h) * (14.0 - 10.0), 1e-12);
    EXPECT_NEAR(f.variance[h - 1], 1.5 * (1 - std::pow(0.7, 2 * h)) / (1 - 0.49), 1e-12);
  }
}

TEST(ArimaForecast, Ma1HorizonTwo) {
  ArimaModel m;
  m.order = {0, 0, 1};
  m.ma = {0.6};
  m.intercept = 2.0;
  m.sigma2 = 0.5;
  const auto f = arima_forecast(m, std::vector<double>{1.0, 3.0, 2.5, 1.2, 2.2}, 2);
  EXPECT_NEAR(f.mean[1], 2.0, 1e-12);
  EXPECT_NEAR(f.variance[0], 0.5, 1e-12);
  EXPECT_NEAR(f.variance[1], 0.5 * (1 + 0.36), 1e-12);
}

TEST(ArimaForecast, RandomWalkWithDrift) {
  ArimaModel m;
  m.order = {0, 1, 0};
  m.intercept = 2.0;
  m.sigma2 = 1.0;
  const auto f = arima_forecast(m, std::vector<double>{0, 1, 5, 6}, 3);
  EXPECT_EQ(f.mean, (std::vector<double>{8, 10, 12}));
  EXPECT_EQ(f.variance, (std::vector<double>{1, 2, 3}));
}

TEST(ArimaForecast, VarianceNonDecreasingForFittedModels) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    auto x = simulate(rng, 120, 0.5, -0.4, 20.0);
    if (trial % 2) {
      for (std::size_t i = 1; i < x.size(); ++i) x[i] += x[i - 1] - 20.0;
    }
    const auto m = fit_auto_arima(x, {2, 2, 2});
    const auto f = arima_forecast(m, x, 12);
    for (int h = 1; h < 12; ++h) EXPECT_GE(f.variance[h], f.variance[h - 1]);
  }
}
