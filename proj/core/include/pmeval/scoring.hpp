#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/contracts.hpp"

namespace pmeval {

/// Floor applied to p_y before taking the log.
inline constexpr double kLogClamp = 1e-10;

enum class Metric { Brier, Log, Crps };

inline constexpr Metric kAllMetrics[] = {Metric::Brier, Metric::Log, Metric::Crps};

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view text);

/// sum_i (p_i - 1{i = y})^2, in [0, 2].
double brier(const PredictiveDistribution& p, std::size_t y);
/// -ln(max(p_y, kLogClamp)).
double log_score(const PredictiveDistribution& p, std::size_t y);
/// sum_i (F_i - 1{y <= i})^2 * width_i over bounded bins; the open top bin adds nothing.
double crps_binned(const PredictiveDistribution& p, std::size_t y);

double score(Metric metric, const PredictiveDistribution& p, std::size_t y);

/// Span forms used by hot loops (combination search); probs must match the partition.
double brier(std::span<const double> probs, std::size_t y);
double log_score(std::span<const double> probs, std::size_t y);
double crps_binned(std::span<const double> probs, const BinPartition& partition, std::size_t y);
double score(Metric metric, std::span<const double> probs, const BinPartition& partition, std::size_t y);

struct ScoreRecord {
  std::string event_id;
  std::string model_id;
  double brier = 0.0;
  double log_score = 0.0;
  double crps = 0.0;
  std::size_t n_snapshots = 0;

  double get(Metric m) const;
};

/// Unweighted (compensated) mean of per-snapshot scores against a fixed outcome.
/// Throws EmptySnapshots.
ScoreRecord score_event(std::span<const MarketSnapshot> snapshots, const Outcome& outcome, std::string event_id,
                        std::string model_id);
ScoreRecord score_event(std::span<const PredictiveDistribution> forecasts, const Outcome& outcome,
                        std::string event_id, std::string model_id);

/// Mean of each metric over events; n_snapshots sums.
ScoreRecord mean_record(std::span<const ScoreRecord> records, std::string event_id, std::string model_id);

enum class PercentileConvention {
  Strict,  // percent of hub models with a strictly worse (higher) mean
  Weak,    // percent with a worse-or-equal mean
};

std::string_view to_string(PercentileConvention c);

/// Lower scores are better. Throws EmptyHub.
double percentile_rank(double candidate_mean, std::span<const double> hub_means,
                       PercentileConvention convention = PercentileConvention::Strict);

}  // namespace pmeval
