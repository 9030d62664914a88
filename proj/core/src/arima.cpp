#include "pmeval/arima.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_linalg.h>
#include <gsl/gsl_multifit.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
// tanh(7) = 1 - 1.7e-6 keeps reflection coefficients strictly inside the unit circle.
constexpr double kMaxRaw = 7.0;

struct GslInit {
  GslInit() { gsl_set_error_handler_off(); }
};
const GslInit gsl_init;

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MatrixDeleter {
  void operator()(gsl_matrix* m) const { gsl_matrix_free(m); }
};
struct PermDeleter {
  void operator()(gsl_permutation* p) const { gsl_permutation_free(p); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct WorkspaceDeleter {
  void operator()(gsl_multifit_linear_workspace* w) const { gsl_multifit_linear_free(w); }
};
using GslVector = std::unique_ptr<gsl_vector, VectorDeleter>;
using GslMatrix = std::unique_ptr<gsl_matrix, MatrixDeleter>;

/// Reflection coefficients -> coefficients of a stable 1 - sum a_i z^i (Durbin-Levinson).
std::vector<double> reflection_to_coeffs(std::span<const double> raw) {
  std::vector<double> a;
  a.reserve(raw.size());
  for (double u : raw) {
    const double r = std::tanh(std::clamp(u, -kMaxRaw, kMaxRaw));
    std::vector<double> next(a.size() + 1);
    for (std::size_t j = 0; j < a.size(); ++j) next[j] = a[j] - r * a[a.size() - 1 - j];
    next.back() = r;
    a = std::move(next);
  }
  return a;
}

/// Inverse of reflection_to_coeffs; returns nullopt-equivalent (empty + false) when unstable.
bool coeffs_to_reflection(std::span<const double> coeffs, std::vector<double>& raw, double tolerance) {
  std::vector<double> a(coeffs.begin(), coeffs.end());
  raw.assign(a.size(), 0.0);
  for (std::size_t k = a.size(); k-- > 0;) {
    const double r = a[k];
    if (!(std::abs(r) < 1.0 - tolerance)) return false;
    raw[k] = std::atanh(r);
    std::vector<double> prev(k);
    const double denom = 1.0 - r * r;
    for (std::size_t j = 0; j < k; ++j) prev[j] = (a[j] + r * a[k - 1 - j]) / denom;
    a = std::move(prev);
  }
  return true;
}

struct KalmanOutput {
  double ssq = 0.0;        // sum v_t^2 / F_t
  double sum_log_f = 0.0;  // sum log F_t
  std::vector<double> state;  // filtered state at the last observation
  std::vector<double> cov;    // filtered covariance (row-major, unit innovation variance)
  bool ok = true;
};

/// Stationary state covariance: P = T P T' + R R'.
bool stationary_covariance(std::size_t r, std::span<const double> ar, std::span<const double> rvec,
                           std::vector<double>& p0) {
  const std::size_t m = r * r;
  GslMatrix a(gsl_matrix_alloc(m, m));
  GslVector b(gsl_vector_alloc(m));
  GslVector x(gsl_vector_alloc(m));
  auto t_at = [&](std::size_t i, std::size_t j) -> double {
    double v = 0.0;
    if (j == 0 && i < ar.size()) v += ar[i];
    if (j == i + 1) v += 1.0;
    return v;
  };
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      const std::size_t row = i * r + j;
      gsl_vector_set(b.get(), row, rvec[i] * rvec[j]);
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t l = 0; l < r; ++l) {
          const double kron = t_at(i, k) * t_at(j, l);
          gsl_matrix_set(a.get(), row, k * r + l, (row == k * r + l ? 1.0 : 0.0) - kron);
        }
      }
    }
  }
  std::unique_ptr<gsl_permutation, PermDeleter> perm(gsl_permutation_alloc(m));
  int sign = 0;
  if (gsl_linalg_LU_decomp(a.get(), perm.get(), &sign) != GSL_SUCCESS) return false;
  if (gsl_linalg_LU_solve(a.get(), perm.get(), b.get(), x.get()) != GSL_SUCCESS) return false;
  p0.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) p0[i] = gsl_vector_get(x.get(), i);
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(p0[i])) return false;
  }
  return true;
}

/// Kalman filter for a zero-mean ARMA in Harvey's state-space form, innovation variance 1.
KalmanOutput kalman_filter(std::span<const double> y, std::span<const double> ar, std::span<const double> ma) {
  const std::size_t p = ar.size();
  const std::size_t q = ma.size();
  const std::size_t r = std::max(p, q + 1);
  std::vector<double> phi(r, 0.0);
  std::copy(ar.begin(), ar.end(), phi.begin());
  std::vector<double> rvec(r, 0.0);
  rvec[0] = 1.0;
  for (std::size_t j = 0; j < q; ++j) rvec[j + 1] = ma[j];

  KalmanOutput out;
  std::vector<double> pmat;
  if (!stationary_covariance(r, phi, rvec, pmat)) {
    out.ok = false;
    return out;
  }
  std::vector<double> a(r, 0.0);
  std::vector<double> af(r), pf(r * r), tmp(r * r), k(r);
  bool steady = false;
  double f = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!steady) {
      f = pmat[0];
      if (!(f > 0.0) || !std::isfinite(f)) {
        out.ok = false;
        return out;
      }
      for (std::size_t i = 0; i < r; ++i) k[i] = pmat[i * r] / f;
    }
    const double v = y[t] - a[0];
    out.ssq += v * v / f;
    out.sum_log_f += std::log(f);
    for (std::size_t i = 0; i < r; ++i) af[i] = a[i] + k[i] * v;
    if (!steady) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) pf[i * r + j] = pmat[i * r + j] - k[i] * pmat[j];
      }
    }
    if (t + 1 == y.size()) break;
    // a <- T af
    for (std::size_t i = 0; i < r; ++i) a[i] = phi[i] * af[0] + (i + 1 < r ? af[i + 1] : 0.0);
    if (!steady) {
      // tmp = T pf
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
          tmp[i * r + j] = phi[i] * pf[j] + (i + 1 < r ? pf[(i + 1) * r + j] : 0.0);
        }
      }
      // P = tmp T' + R R'
      double change = 0.0;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
          const double next =
              tmp[i * r] * phi[j] + (j + 1 < r ? tmp[i * r + j + 1] : 0.0) + rvec[i] * rvec[j];
          change = std::max(change, std::abs(next - pmat[i * r + j]));
          pmat[i * r + j] = next;
        }
      }
      if (change < 1e-14) steady = true;
    }
  }
  out.state = af;
  out.cov = pf;
  return out;
}

struct Parameters {
  std::vector<double> ar;
  std::vector<double> ma;
  double intercept = 0.0;
};

struct Problem {
  std::span<const double> w;
  std::size_t p;
  std::size_t q;
  double center;
  double scale;
  std::vector<double> y;  // scratch

  Parameters unpack(const gsl_vector* x) const {
    std::vector<double> raw_ar(p), raw_ma(q);
    for (std::size_t i = 0; i < p; ++i) raw_ar[i] = gsl_vector_get(x, i);
    for (std::size_t j = 0; j < q; ++j) raw_ma[j] = gsl_vector_get(x, p + j);
    Parameters out;
    out.ar = reflection_to_coeffs(raw_ar);
    out.ma = reflection_to_coeffs(raw_ma);
    for (double& m : out.ma) m = -m;
    out.intercept = center + scale * gsl_vector_get(x, p + q);
    return out;
  }
};

double css_objective(const gsl_vector* x, void* data) {
  auto& prob = *static_cast<Problem*>(data);
  const Parameters par = prob.unpack(x);
  const std::size_t n = prob.w.size();
  std::vector<double> e(n, 0.0);
  double ssq = 0.0;
  for (std::size_t t = prob.p; t < n; ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < prob.p; ++i) pred += par.ar[i] * (prob.w[t - 1 - i] - par.intercept);
    for (std::size_t j = 0; j < prob.q && j < t; ++j) pred += par.ma[j] * e[t - 1 - j];
    e[t] = (prob.w[t] - par.intercept) - pred;
    ssq += e[t] * e[t];
  }
  const double value = ssq / static_cast<double>(n - prob.p);
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

double ml_objective(const gsl_vector* x, void* data) {
  auto& prob = *static_cast<Problem*>(data);
  const Parameters par = prob.unpack(x);
  const std::size_t n = prob.w.size();
  prob.y.resize(n);
  for (std::size_t t = 0; t < n; ++t) prob.y[t] = prob.w[t] - par.intercept;
  const KalmanOutput k = kalman_filter(prob.y, par.ar, par.ma);
  if (!k.ok || !(k.ssq > 0.0)) return std::numeric_limits<double>::max();
  const double nd = static_cast<double>(n);
  const double value = 0.5 * (std::log(k.ssq / nd) + k.sum_log_f / nd);
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

/// Nelder-Mead (GSL nmsimplex2) from `start`, restarted at the optimum `rounds - 1` times.
std::vector<double> minimize(double (*fn)(const gsl_vector*, void*), Problem& prob, std::vector<double> start,
                             double step, double tolerance, int rounds) {
  const std::size_t dim = start.size();
  gsl_multimin_function func{fn, dim, &prob};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
  GslVector x(gsl_vector_alloc(dim));
  GslVector steps(gsl_vector_alloc(dim));
  for (int round = 0; round < rounds; ++round) {
    for (std::size_t i = 0; i < dim; ++i) {
      gsl_vector_set(x.get(), i, start[i]);
      gsl_vector_set(steps.get(), i, round == 0 ? step : step * 0.2);
    }
    gsl_multimin_fminimizer_set(s.get(), &func, x.get(), steps.get());
    for (int iter = 0; iter < 4000; ++iter) {
      if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), tolerance) == GSL_SUCCESS) break;
    }
    for (std::size_t i = 0; i < dim; ++i) start[i] = gsl_vector_get(s->x, i);
  }
  return start;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

bool is_constant(std::span<const double> v) {
  if (v.empty()) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(v.front()));
  return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - v.front()) <= tol; });
}

void check_finite(std::span<const double> series) {
  for (double x : series) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "series contains a non-finite value");
  }
}

ArimaModel degenerate_model(std::span<const double> w, int d, double sigma2_floor) {
  ArimaModel m;
  m.order = {0, d, 0};
  m.intercept = mean_of(w);
  m.sigma2 = sigma2_floor;
  m.n_obs = w.size();
  m.log_likelihood = arma_log_likelihood(w, {}, {}, m.intercept, m.sigma2);
  m.aic = 2.0 * 2 - 2.0 * m.log_likelihood;
  return m;
}

/// Any AR or MA root with modulus below kMinRootModulus. Fits pinned to the unit circle
/// (typically a cancelling AR/MA pair) are not usable forecasting models.
constexpr double kMinRootModulus = 1.01;

bool near_unit_root(const ArimaModel& m) {
  // 1 - sum c_i z^i has all roots beyond rho iff c_i rho^i is a stationary polynomial.
  auto beyond = [](std::span<const double> c, double sign) {
    std::vector<double> scaled(c.size());
    double power = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      power *= kMinRootModulus;
      scaled[i] = sign * c[i] * power;
    }
    std::vector<double> raw;
    return coeffs_to_reflection(scaled, raw, 0.0);
  };
  return !beyond(m.ar, 1.0) || !beyond(m.ma, -1.0);
}

}  // namespace

std::vector<double> difference(std::span<const double> series, int d) {
  std::vector<double> out(series.begin(), series.end());
  for (int k = 0; k < d; ++k) {
    if (out.size() < 2) return {};
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

double adf_statistic(std::span<const double> w) {
  const std::size_t n = w.size();
  const auto lags = static_cast<std::size_t>(std::trunc(std::cbrt(static_cast<double>(n) - 1.0)));
  if (n < lags + 6) throw Error(ErrorCode::TooShort, "series too short for a unit-root test");
  std::vector<double> dw(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) dw[t] = w[t + 1] - w[t];
  const std::size_t rows = dw.size() - lags;
  const std::size_t cols = 2 + lags;
  GslMatrix x(gsl_matrix_alloc(rows, cols));
  GslVector y(gsl_vector_alloc(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + lags;
    gsl_vector_set(y.get(), r, dw[t]);
    gsl_matrix_set(x.get(), r, 0, 1.0);
    gsl_matrix_set(x.get(), r, 1, w[t]);
    for (std::size_t i = 1; i <= lags; ++i) gsl_matrix_set(x.get(), r, 1 + i, dw[t - i]);
  }
  GslVector c(gsl_vector_alloc(cols));
  GslMatrix cov(gsl_matrix_alloc(cols, cols));
  std::unique_ptr<gsl_multifit_linear_workspace, WorkspaceDeleter> work(gsl_multifit_linear_alloc(rows, cols));
  double chisq = 0.0;
  if (gsl_multifit_linear(x.get(), y.get(), c.get(), cov.get(), &chisq, work.get()) != GSL_SUCCESS) {
    throw Error(ErrorCode::FitFailure, "unit-root regression failed");
  }
  const double se = std::sqrt(gsl_matrix_get(cov.get(), 1, 1));
  if (!(se > 0.0)) return -std::numeric_limits<double>::infinity();
  return gsl_vector_get(c.get(), 1) / se;
}

int select_differencing(std::span<const double> series, int max_d) {
  int d = 0;
  std::vector<double> w(series.begin(), series.end());
  while (d < max_d) {
    if (is_constant(w)) break;
    if (adf_statistic(w) < kAdfCritical5) break;
    w = difference(w, 1);
    ++d;
  }
  return d;
}

double arma_log_likelihood(std::span<const double> w, std::span<const double> ar, std::span<const double> ma,
                           double intercept, double sigma2) {
  std::vector<double> y(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) y[t] = w[t] - intercept;
  const KalmanOutput k = kalman_filter(y, ar, ma);
  if (!k.ok) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(w.size());
  return -0.5 * (n * kLog2Pi + n * std::log(sigma2) + k.sum_log_f + k.ssq / sigma2);
}

std::vector<double> psi_weights(std::span<const double> ar, std::span<const double> ma, std::size_t count) {
  std::vector<double> psi(count, 0.0);
  for (std::size_t j = 0; j < count; ++j) {
    double v = j == 0 ? 1.0 : (j - 1 < ma.size() ? ma[j - 1] : 0.0);
    for (std::size_t i = 1; i <= std::min(j, ar.size()); ++i) v += ar[i - 1] * psi[j - i];
    psi[j] = v;
  }
  return psi;
}

std::vector<double> integrated_ar(std::span<const double> ar, int d) {
  // Polynomial 1 - sum ar_i z^i as coefficients c_0..c_p, multiplied by (1 - z)^d.
  std::vector<double> poly(ar.size() + 1);
  poly[0] = 1.0;
  for (std::size_t i = 0; i < ar.size(); ++i) poly[i + 1] = -ar[i];
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= poly[i];
    }
    poly = std::move(next);
  }
  std::vector<double> out(poly.size() - 1);
  for (std::size_t i = 1; i < poly.size(); ++i) out[i - 1] = -poly[i];
  return out;
}

bool is_stationary(std::span<const double> coeffs, double tolerance) {
  std::vector<double> raw;
  return coeffs_to_reflection(coeffs, raw, tolerance);
}

ArimaModel fit_arima(std::span<const double> series, ArimaOrder order, double sigma2_floor) {
  check_finite(series);
  if (order.p < 0 || order.d < 0 || order.q < 0) throw Error(ErrorCode::FitFailure, "negative order");
  const std::vector<double> w = difference(series, order.d);
  if (w.size() <= static_cast<std::size_t>(order.p + order.q + 2)) {
    throw Error(ErrorCode::TooShort, "series too short for the requested order");
  }
  if (is_constant(w)) return degenerate_model(w, order.d, sigma2_floor);

  const auto p = static_cast<std::size_t>(order.p);
  const auto q = static_cast<std::size_t>(order.q);
  Problem prob{w, p, q, mean_of(w), std::max(sd_of(w), 1e-12), {}};

  std::vector<double> start(p + q + 1, 0.0);
  // CSS only supplies a starting point for the exact likelihood.
  std::vector<double> css = minimize(&css_objective, prob, start, 0.3, 1e-4, 1);
  std::vector<double> ml = minimize(&ml_objective, prob, css, 0.1, 1e-8, 2);

  GslVector x(gsl_vector_alloc(ml.size()));
  for (std::size_t i = 0; i < ml.size(); ++i) gsl_vector_set(x.get(), i, ml[i]);
  const double objective = ml_objective(x.get(), &prob);
  if (!(objective < std::numeric_limits<double>::max())) {
    throw Error(ErrorCode::FitFailure, "likelihood did not converge for ARIMA(" + std::to_string(order.p) + "," +
                                           std::to_string(order.d) + "," + std::to_string(order.q) + ")");
  }
  const Parameters par = prob.unpack(x.get());

  ArimaModel m;
  m.order = order;
  m.ar = par.ar;
  m.ma = par.ma;
  m.intercept = par.intercept;
  m.n_obs = w.size();
  std::vector<double> y(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) y[t] = w[t] - m.intercept;
  const KalmanOutput k = kalman_filter(y, m.ar, m.ma);
  m.sigma2 = std::max(k.ssq / static_cast<double>(w.size()), sigma2_floor);
  m.log_likelihood = arma_log_likelihood(w, m.ar, m.ma, m.intercept, m.sigma2);
  const double k_params = static_cast<double>(order.p + order.q + 2);
  m.aic = 2.0 * k_params - 2.0 * m.log_likelihood;
  if (!std::isfinite(m.aic)) throw Error(ErrorCode::FitFailure, "non-finite AIC");
  return m;
}

ArimaModel fit_auto_arima(std::span<const double> series, const AutoArimaOptions& options) {
  check_finite(series);
  if (series.size() < options.min_length) {
    throw Error(ErrorCode::TooShort, "need at least " + std::to_string(options.min_length) + " observations, got " +
                                         std::to_string(series.size()));
  }
  int max_d = options.max_d;
  while (max_d > 0 && series.size() - static_cast<std::size_t>(max_d) < options.min_length) --max_d;
  const int d = select_differencing(series, max_d);
  const std::vector<double> w = difference(series, d);
  if (is_constant(w)) return degenerate_model(w, d, options.sigma2_floor);

  std::map<std::pair<int, int>, std::optional<ArimaModel>> fitted;
  auto fit = [&](int p, int q) -> const std::optional<ArimaModel>& {
    auto [it, fresh] = fitted.try_emplace({p, q});
    if (fresh) {
      try {
        it->second = fit_arima(series, {p, d, q}, options.sigma2_floor);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::FitFailure && e.code() != ErrorCode::TooShort) throw;
      }
    }
    return it->second;
  };
  auto allowed = [&](int p, int q) {
    if (p < 0 || q < 0 || p > options.max_p || q > options.max_q) return false;
    return options.search == OrderSearch::Grid || p + q <= options.max_order;
  };
  std::optional<ArimaModel> best;
  // True when m should replace the current best.
  auto consider = [&](int p, int q) {
    if (!allowed(p, q)) return false;
    const auto& m = fit(p, q);
    if (!m || near_unit_root(*m)) return false;
    if (!best) {
      best = m;
      return true;
    }
    const double diff = m->aic - best->aic;
    const int size_new = p + q;
    const int size_best = best->order.p + best->order.q;
    const bool better = diff < -1e-9 || (std::abs(diff) <= 1e-9 && (size_new < size_best ||
                                                                    (size_new == size_best && q < best->order.q)));
    if (better) best = m;
    return better;
  };

  if (options.search == OrderSearch::Grid) {
    for (int p = 0; p <= options.max_p; ++p) {
      for (int q = 0; q <= options.max_q; ++q) consider(p, q);
    }
  } else {
    for (const auto& [p, q] : {std::pair{2, 2}, {0, 0}, {1, 0}, {0, 1}}) {
      consider(std::min(p, options.max_p), std::min(q, options.max_q));
    }
    bool moved = best.has_value();
    while (moved) {
      moved = false;
      const int p0 = best->order.p;
      const int q0 = best->order.q;
      const std::pair<int, int> steps[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {1, 1}, {-1, 1}, {1, -1}};
      for (const auto& [dp, dq] : steps) {
        if (consider(p0 + dp, q0 + dq)) {
          moved = true;
          break;
        }
      }
    }
  }
  if (!best) throw Error(ErrorCode::FitFailure, "no ARIMA order converged");
  return *best;
}

ArimaForecast arima_forecast(const ArimaModel& model, std::span<const double> series, int horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidForecast, "horizon must be at least 1");
  const int d = model.order.d;
  const std::vector<double> w = difference(series, d);
  if (w.empty()) throw Error(ErrorCode::TooShort, "series shorter than the differencing order");

  const auto h = static_cast<std::size_t>(horizon);
  std::vector<double> y(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) y[t] = w[t] - model.intercept;
  const KalmanOutput k = kalman_filter(y, model.ar, model.ma);
  if (!k.ok) throw Error(ErrorCode::FitFailure, "model is not stationary");

  // Differenced-scale forecasts from the filtered state.
  const std::size_t r = k.state.size();
  std::vector<double> phi(r, 0.0);
  std::copy(model.ar.begin(), model.ar.end(), phi.begin());
  std::vector<double> a = k.state;
  std::vector<double> w_hat(h);
  for (std::size_t step = 0; step < h; ++step) {
    std::vector<double> next(r);
    for (std::size_t i = 0; i < r; ++i) next[i] = phi[i] * a[0] + (i + 1 < r ? a[i + 1] : 0.0);
    a = std::move(next);
    w_hat[step] = model.intercept + a[0];
  }

  // Undo differencing one order at a time, anchored on the last observed value at that order.
  std::vector<double> level = w_hat;
  for (int order = d - 1; order >= 0; --order) {
    const std::vector<double> base = difference(series, order);
    double last = base.back();
    for (double& v : level) {
      last += v;
      v = last;
    }
  }

  ArimaForecast out;
  out.mean = std::move(level);
  const std::vector<double> psi = psi_weights(integrated_ar(model.ar, d), model.ma, h);
  out.variance.resize(h);
  double acc = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    acc += psi[j] * psi[j];
    out.variance[j] = model.sigma2 * acc;
  }
  return out;
}

}  // namespace pmeval
