#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pmeval/csv.hpp"
#include "pmeval/error.hpp"
#include "pmeval/quantiles.hpp"

namespace pmeval {

HubForecasts read_hub_forecasts(const std::filesystem::path& path, const std::string& location) {
  const csv::Table table = csv::Table::read(path);
  const std::size_t c_ref = table.require_column("reference_date");
  const std::size_t c_target = table.require_column("target");
  const std::size_t c_horizon = table.require_column("horizon");
  const std::size_t c_type = table.require_column("output_type");
  const std::size_t c_level = table.require_column("output_type_id");
  const std::size_t c_value = table.require_column("value");
  const std::size_t c_model = table.require_column("model_id");
  const auto c_location = table.column("location");

  std::map<HubForecastKey, std::map<double, double>> collected;
  for (const auto& row : table.rows()) {
    if (row.fields[c_type] != "quantile") continue;
    if (!location.empty() && c_location && row.fields[*c_location] != location) continue;
    HubForecastKey key;
    key.model_id = row.fields[c_model];
    key.target = row.fields[c_target];
    key.reference_date = row.fields[c_ref];
    const double horizon = csv::parse_number(row.fields[c_horizon], table.source(), row.line, "horizon");
    if (horizon != std::floor(horizon)) {
      throw Error(ErrorCode::SchemaError, table.source() + ":" + std::to_string(row.line) + ": fractional horizon");
    }
    key.horizon = static_cast<int>(horizon);
    const double level = csv::parse_number(row.fields[c_level], table.source(), row.line, "output_type_id");
    const double value = csv::parse_number(row.fields[c_value], table.source(), row.line, "value");
    auto& levels = collected[key];
    if (!levels.emplace(level, value).second) {
      throw Error(ErrorCode::SchemaError, table.source() + ":" + std::to_string(row.line) + ": repeated quantile level");
    }
  }

  HubForecasts out;
  for (auto& [key, levels] : collected) {
    QuantileForecast qf;
    for (const auto& [level, value] : levels) {
      qf.levels.push_back(level);
      qf.values.push_back(value);
    }
    // Submitted quantiles occasionally cross by rounding; enforce monotone values.
    for (std::size_t j = 1; j < qf.values.size(); ++j) qf.values[j] = std::max(qf.values[j], qf.values[j - 1]);
    qf.reference_time = parse_timestamp_or_date(key.reference_date);
    qf.horizon_weeks = key.horizon;
    try {
      qf.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaError, table.source() + ": model " + key.model_id + " " + key.reference_date +
                                              ": " + e.what());
    }
    out.emplace(key, std::move(qf));
  }
  return out;
}

}  // namespace pmeval
