#include "pmeval/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {

void QuantileForecast::validate() const {
  if (levels.size() != values.size()) throw Error(ErrorCode::InvalidForecast, "levels and values differ in length");
  if (levels.size() < 2) throw Error(ErrorCode::InvalidForecast, "need at least two quantiles");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0 && levels[j] < 1.0)) throw Error(ErrorCode::InvalidForecast, "level outside (0,1)");
    if (!std::isfinite(values[j])) throw Error(ErrorCode::InvalidForecast, "non-finite quantile value");
    if (j > 0 && !(levels[j] > levels[j - 1])) throw Error(ErrorCode::InvalidForecast, "levels not increasing");
    if (j > 0 && values[j] < values[j - 1]) throw Error(ErrorCode::InvalidForecast, "quantile values decrease");
  }
}

QuantileForecast incident_to_cumulative(const QuantileForecast& incident, double last_cumulative, double kappa) {
  incident.validate();
  if (!(last_cumulative >= 0.0)) throw Error(ErrorCode::InvalidForecast, "last cumulative value must be >= 0");
  if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidForecast, "kappa must be positive");
  QuantileForecast out = incident;
  for (double& v : out.values) v = last_cumulative + kappa * v;
  return out;
}

PredictiveDistribution quantiles_to_bins(const QuantileForecast& forecast, const BinPartition& partition) {
  forecast.validate();
  const auto edges = partition.edges();
  const std::size_t k = partition.size();
  std::vector<double> mass(k, 0.0);

  auto bin_for_point = [&](double x) { return x < edges.front() ? std::size_t{0} : partition.bin_of(x); };
  // Bin 0 extends to -inf so sub-floor mass folds into it.
  auto bin_lo = [&](std::size_t b) { return b == 0 ? -std::numeric_limits<double>::infinity() : edges[b]; };
  auto bin_hi = [&](std::size_t b) { return partition.upper(b); };

  const auto& lv = forecast.levels;
  const auto& v = forecast.values;
  mass[bin_for_point(v.front())] += lv.front();
  mass[bin_for_point(v.back())] += 1.0 - lv.back();

  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    const double a = v[j];
    const double b = v[j + 1];
    const double m = lv[j + 1] - lv[j];
    if (!(b > a)) {
      mass[bin_for_point(a)] += m;
      continue;
    }
    const std::size_t first = bin_for_point(a);
    for (std::size_t bin = first; bin < k; ++bin) {
      const double lo = std::max(a, bin_lo(bin));
      const double hi = std::min(b, bin_hi(bin));
      if (lo >= b) break;
      if (hi > lo) mass[bin] += m * ((hi - lo) / (b - a));
    }
  }
  for (double& p : mass) p = std::clamp(p, 0.0, 1.0);
  return PredictiveDistribution(partition, std::move(mass));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

PredictiveDistribution gaussian_to_bins(double mean, double variance, const BinPartition& partition) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw Error(ErrorCode::InvalidForecast, "gaussian needs finite mean and positive variance");
  }
  const double sd = std::sqrt(variance);
  const auto edges = partition.edges();
  const std::size_t k = partition.size();
  std::vector<double> mass(k);
  // Lower-tail CDF below the median, upper-tail complement above it, for precision in the tails.
  auto lower_cdf = [&](double x) { return normal_cdf((x - mean) / sd); };
  auto upper_tail = [&](double x) { return normal_cdf((mean - x) / sd); };
  for (std::size_t b = 0; b < k; ++b) {
    if (b == 0 && k == 1) {
      mass[b] = 1.0;
    } else if (b == 0) {
      mass[b] = lower_cdf(edges[1]);
    } else if (b + 1 == k) {
      mass[b] = upper_tail(edges[b]);
    } else if (edges[b] >= mean) {
      mass[b] = upper_tail(edges[b]) - upper_tail(edges[b + 1]);
    } else {
      mass[b] = lower_cdf(edges[b + 1]) - lower_cdf(edges[b]);
    }
    mass[b] = std::clamp(mass[b], 0.0, 1.0);
  }
  return PredictiveDistribution(partition, std::move(mass));
}

}  // namespace pmeval
