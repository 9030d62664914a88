#include "pmeval/diagnostics.hpp"

#include <algorithm>

namespace pmeval {

double impossible_mass(const PredictiveDistribution& dist, double known_floor) {
  const BinPartition& part = dist.partition();
  std::vector<double> below;
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (part.bounded(i) && part.upper(i) <= known_floor) below.push_back(dist[i]);
  }
  return std::clamp(compensated_sum(below), 0.0, 1.0);
}

VolumeSummary volume_summary(std::span<const MarketRecord> records) {
  VolumeSummary out;
  std::vector<double> totals;
  for (const auto& rec : records) {
    MarketVolume mv{rec.market_id, std::nullopt};
    if (rec.volume && !rec.volume->empty()) {
      const auto& pts = *rec.volume;
      mv.total_usd = pts.back().usd;
      double previous = 0.0;
      for (const auto& p : pts) {
        out.weekly_usd[iso_week(p.time)] += p.usd - previous;
        previous = p.usd;
      }
      totals.push_back(pts.back().usd);
      ++out.markets_with_volume;
    } else {
      ++out.markets_missing;
    }
    out.markets.push_back(std::move(mv));
  }
  out.aggregate_usd = compensated_sum(totals);
  return out;
}

}  // namespace pmeval
