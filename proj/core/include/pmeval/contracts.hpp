#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/ingest.hpp"
#include "pmeval/time.hpp"

namespace pmeval {

// ---------------------------------------------------------------------------
// Label parsing

/// Numeric threshold N of an "at least N" contract label. Accepts thousands
/// separators ("1,500", "1 500") and a k/K suffix ("2k" = 2000). Four-digit years
/// within two words of a month name and day-of-month numbers next to a month name
/// are date context and ignored. Throws NoNumber / AmbiguousNumber.
double parse_threshold_label(std::string_view label);

/// Interval named by a range-bin label: "1.5-2.0", "under 1.0", "<1", "3.0+",
/// "3 or more". A missing lower bound means "from the partition floor"; a missing
/// upper bound means open-ended. Throws NoNumber / AmbiguousNumber.
struct RangeBounds {
  std::optional<double> lower;
  std::optional<double> upper;
};
RangeBounds parse_range_label(std::string_view label);

// ---------------------------------------------------------------------------
// Conversion to predictive distributions

struct ThresholdQuote {
  double threshold;  // N
  double prob;       // price of "at least N"
};

struct ThresholdConversion {
  PredictiveDistribution dist;
  double raw_sum;
  /// Total magnitude of negative adjacent differences that were clamped to zero.
  double monotonicity_violation;
};

/// Edges [0, N_1, ..., N_m] for sorted thresholds (the leading 0 is dropped when N_1 == 0).
BinPartition threshold_partition(std::vector<double> thresholds);

/// Adjacent differences of "at least N" prices: [1-q_1, q_1-q_2, ..., q_m], negative
/// differences clamped to zero, then renormalized. Throws DuplicateThreshold,
/// ContractBinMismatch (partition is not threshold_partition of the quotes), DegenerateMass.
ThresholdConversion thresholds_to_distribution(std::span<const ThresholdQuote> quotes, const BinPartition& partition);

struct RangeConversion {
  PredictiveDistribution dist;
  double raw_sum;
};

/// One price per bin, each in [0,1]; normalized. Errors as normalize().
RangeConversion range_bins_to_distribution(std::span<const double> prices, const BinPartition& partition);

// ---------------------------------------------------------------------------
// Snapshots

struct MarketSnapshot {
  Timestamp time;
  PredictiveDistribution dist;
  double raw_sum;
  double monotonicity_violation;  // always 0 for range-bin markets
};

struct SnapshotSeries {
  std::vector<MarketSnapshot> snapshots;
  std::size_t skipped_degenerate = 0;
};

/// Partition implied by the contract labels of a market.
BinPartition infer_partition(const MarketRecord& record);

/// One snapshot per grid point (observed timestamps floored to the fidelity interval)
/// at which every contract has a price; each contract contributes its last observation
/// at or before the grid point. Degenerate snapshots are skipped and counted.
/// Throws ContractBinMismatch when contracts do not map one-to-one onto the partition.
SnapshotSeries snapshot_series(const MarketRecord& record, const BinPartition& partition, int fidelity_minutes = 60);

}  // namespace pmeval
