#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/contracts.hpp"
#include "pmeval/ingest.hpp"
#include "pmeval/time.hpp"

namespace pmeval {

/// Probability on bins lying wholly below the latest observed cumulative value
/// (upper edge <= known_floor). The bin containing the floor is not counted.
double impossible_mass(const PredictiveDistribution& dist, double known_floor);
inline double impossible_mass(const MarketSnapshot& snapshot, double known_floor) {
  return impossible_mass(snapshot.dist, known_floor);
}

struct MarketVolume {
  std::string market_id;
  std::optional<double> total_usd;  // nullopt when the market has no volume series
};

struct VolumeSummary {
  std::vector<MarketVolume> markets;
  /// Traded notional per ISO week, summed over markets with volume data.
  std::map<IsoWeek, double> weekly_usd;
  double aggregate_usd = 0.0;
  std::size_t markets_with_volume = 0;
  std::size_t markets_missing = 0;
};

/// Volume series are cumulative; a market's total is its last value and each increment
/// is booked to the ISO week of the later observation.
VolumeSummary volume_summary(std::span<const MarketRecord> records);

}  // namespace pmeval
