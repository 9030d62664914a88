#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/time.hpp"

namespace pmeval {

/// Hub-style quantile forecast: strictly increasing levels in (0,1), non-decreasing values.
struct QuantileForecast {
  std::vector<double> levels;
  std::vector<double> values;
  Timestamp reference_time{};
  int horizon_weeks = 0;

  /// Throws InvalidForecast.
  void validate() const;
};

/// values'[j] = last_cumulative + kappa * values[j]; levels unchanged.
QuantileForecast incident_to_cumulative(const QuantileForecast& incident, double last_cumulative, double kappa);

/// Bin masses of the piecewise-linear CDF through (values[j], levels[j]). Tail mass below
/// the first and above the last quantile is placed in the bins holding those quantiles;
/// flat segments are jumps assigned by the higher-bin boundary rule; mass below the
/// partition floor folds into bin 0.
PredictiveDistribution quantiles_to_bins(const QuantileForecast& forecast, const BinPartition& partition);

/// Normal CDF differences at the bin edges; mass below the floor folds into bin 0.
PredictiveDistribution gaussian_to_bins(double mean, double variance, const BinPartition& partition);

/// Standard normal CDF.
double normal_cdf(double z);

// ---------------------------------------------------------------------------
// Hub submissions (long format): reference_date, target, horizon, output_type,
// output_type_id, value, model_id. Only output_type == "quantile" rows are kept.

struct HubForecastKey {
  std::string model_id;
  std::string target;
  std::string reference_date;  // YYYY-MM-DD as submitted
  int horizon = 0;

  auto operator<=>(const HubForecastKey&) const = default;
};

using HubForecasts = std::map<HubForecastKey, QuantileForecast>;

/// Optional `location` column is honored when `location` is non-empty.
HubForecasts read_hub_forecasts(const std::filesystem::path& path, const std::string& location = {});

}  // namespace pmeval
