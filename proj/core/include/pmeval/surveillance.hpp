#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmeval/bins.hpp"
#include "pmeval/ingest.hpp"
#include "pmeval/time.hpp"

namespace pmeval {

/// One published vintage of a cumulative surveillance quantity.
struct SurveillanceSnapshot {
  Timestamp published;
  std::string target_key;  // disease + geography + metric
  double as_of_value;      // cumulative, target units
  std::string source;

  bool operator==(const SurveillanceSnapshot&) const = default;
};

/// All vintages of one target, ordered by publication time. Values may go down
/// between publications (revisions); nothing is overwritten.
class SurveillanceSeries {
 public:
  /// Sorts by publication time. Throws DuplicatePublication on a repeated time and
  /// SchemaError on a negative value or a snapshot for another target.
  SurveillanceSeries(std::string target_key, std::vector<SurveillanceSnapshot> snapshots);

  const std::string& target_key() const noexcept { return target_key_; }
  const std::vector<SurveillanceSnapshot>& snapshots() const noexcept { return snapshots_; }

  /// Latest snapshot published at or before t.
  const SurveillanceSnapshot* latest_at_or_before(Timestamp t) const;
  /// Earliest snapshot published at or after t.
  const SurveillanceSnapshot* first_at_or_after(Timestamp t) const;

  /// Values of every publication up to and including t, in publication order.
  std::vector<double> history_as_of(Timestamp t) const;

 private:
  std::string target_key_;
  std::vector<SurveillanceSnapshot> snapshots_;
};

using SurveillanceStore = std::map<std::string, SurveillanceSeries>;

/// Reads a CSV file (or every *.csv in a directory) with columns
/// target_key, published, value, source. Rows repeating (target_key, published)
/// with the same value are merged; conflicting values raise DuplicatePublication.
SurveillanceStore ingest_snapshots(const std::filesystem::path& path);

/// What was known at t: the value of the latest publication at or before t.
std::optional<double> value_as_of(const SurveillanceSeries& series, Timestamp t);

/// Settles a market on the first publication at or after its resolution time.
/// Throws Unresolved when no such publication exists.
Outcome resolve_outcome(const MarketRecord& market, const SurveillanceSeries& series, const BinPartition& partition);

}  // namespace pmeval
