#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmeval {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  bool operator==(const ArimaOrder&) const = default;
};

/// ARIMA(p,d,q) with intercept on the d-times differenced series:
///   (1 - sum ar_i B^i)(w_t - intercept) = (1 + sum ma_j B^j) e_t,  e_t ~ N(0, sigma2).
struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar;
  std::vector<double> ma;
  double intercept = 0.0;
  double sigma2 = 1.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  std::size_t n_obs = 0;  // length of the differenced series
};

enum class OrderSearch {
  Stepwise,  // start from (2,2), (0,0), (1,0), (0,1) and move to better neighbours
  Grid,      // every (p,q) with p <= max_p, q <= max_q
};

struct AutoArimaOptions {
  int max_p = 3;
  int max_q = 3;
  int max_d = 2;
  OrderSearch search = OrderSearch::Stepwise;
  int max_order = 5;  // stepwise only: p + q cap
  double sigma2_floor = 1e-8;
  std::size_t min_length = 20;  // after differencing
};

/// Selects d by repeated augmented Dickey-Fuller tests, then (p,q) by minimum
/// AIC = 2k - 2 lnL with k = p + q + 2, searched stepwise or over the full grid. Ties
/// within 1e-9 prefer smaller p+q, then smaller q. Candidates with an AR or MA root of
/// modulus below 1.01 are discarded. Throws TooShort, NonFinite, FitFailure.
ArimaModel fit_auto_arima(std::span<const double> series, const AutoArimaOptions& options = {});

/// CSS start, exact Gaussian ML refinement for a fixed order. Throws FitFailure.
ArimaModel fit_arima(std::span<const double> series, ArimaOrder order, double sigma2_floor = 1e-8);

/// Smallest d in [0, max_d] whose d-th difference rejects a unit root at 5%.
int select_differencing(std::span<const double> series, int max_d);

/// ADF t-statistic (constant, lag order trunc((n-1)^(1/3))).
double adf_statistic(std::span<const double> series);

/// 5% asymptotic critical value of the ADF test with constant.
inline constexpr double kAdfCritical5 = -2.86;

std::vector<double> difference(std::span<const double> series, int d);

/// Exact Gaussian log-likelihood of an ARMA model for the (already differenced) series.
double arma_log_likelihood(std::span<const double> w, std::span<const double> ar, std::span<const double> ma,
                           double intercept, double sigma2);

/// Psi weights of ar_poly(B)^{-1} ma_poly(B), first `count` terms (psi_0 = 1).
std::vector<double> psi_weights(std::span<const double> ar, std::span<const double> ma, std::size_t count);

/// AR coefficients of (1 - sum ar_i B^i)(1 - B)^d.
std::vector<double> integrated_ar(std::span<const double> ar, int d);

/// True when 1 - sum coeffs_i z^i has every root outside the unit circle (Schur-Cohn step-down).
bool is_stationary(std::span<const double> coeffs, double tolerance = 1e-6);

struct ArimaForecast {
  std::vector<double> mean;
  std::vector<double> variance;  // sigma2 * sum_{j<h} psi_j^2, non-decreasing
};

/// h-step forecasts on the original (undifferenced) scale, h = 1..horizon.
ArimaForecast arima_forecast(const ArimaModel& model, std::span<const double> series, int horizon);

}  // namespace pmeval
