#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/scoring.hpp"

namespace pmeval {

/// Two forecasts of the same event on the same partition, plus the realized bin.
struct PairedEvent {
  PredictiveDistribution a;  // the ensemble / reference forecast
  PredictiveDistribution b;  // the challenger (market)
  std::size_t outcome_bin;
  /// Relative weight in the mean (1/n for each of n snapshots of one market).
  double weight = 1.0;
};

/// Weighted mean score of q = alpha * a + (1 - alpha) * b over a grid of alpha.
struct CombinationCurve {
  Metric metric = Metric::Brier;
  std::vector<double> alphas;       // 0, step, ..., 1
  std::vector<double> mean_scores;  // one per alpha
  double alpha_star = 1.0;
  double best_score = 0.0;
};

/// Mean scores closer than this are ties; ties resolve toward the larger alpha.
inline constexpr double kAlphaTieTolerance = 1e-12;

/// Throws EmptyEvents, InvalidGrid (step must divide 1 evenly), InvalidDistribution
/// when an event's two forecasts use different partitions.
CombinationCurve optimize_alpha(std::span<const PairedEvent> events, Metric metric, double grid_step = 0.01);

}  // namespace pmeval
