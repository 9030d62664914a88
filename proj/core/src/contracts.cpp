#include "pmeval/contracts.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {
namespace {

bool same_edge(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

/// Integer-count labels ("2,000-2,499", "2,500-2,999") leave a gap of exactly one.
bool touches(double upper, double next_lower) {
  return same_edge(upper, next_lower) || (upper == std::floor(upper) && next_lower == std::floor(next_lower) &&
                                          same_edge(upper + 1.0, next_lower));
}

[[noreturn]] void mismatch(const MarketRecord& record, const std::string& what) {
  throw Error(ErrorCode::ContractBinMismatch, "market " + record.market_id + ": " + what);
}

/// Contract index -> bin (range markets) or threshold rank (threshold markets).
std::vector<std::size_t> map_contracts(const MarketRecord& record, const BinPartition& partition,
                                       std::vector<double>* thresholds_out) {
  std::vector<std::size_t> slot(record.contracts.size());
  if (record.structure == MarketStructure::Thresholds) {
    std::vector<double> thresholds;
    for (const auto& c : record.contracts) {
      try {
        thresholds.push_back(parse_threshold_label(c.label));
      } catch (const Error& e) {
        mismatch(record, "contract " + c.contract_id + ": " + e.what());
      }
    }
    std::vector<double> sorted = thresholds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) mismatch(record, "duplicate thresholds");
    if (!(threshold_partition(sorted) == partition)) mismatch(record, "partition does not match contract thresholds");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      slot[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), thresholds[i]) - sorted.begin());
    }
    if (thresholds_out) *thresholds_out = std::move(sorted);
    return slot;
  }

  if (record.contracts.size() != partition.size()) {
    mismatch(record, std::to_string(record.contracts.size()) + " contracts for " + std::to_string(partition.size()) +
                         " bins");
  }
  std::set<std::size_t> used;
  for (std::size_t i = 0; i < record.contracts.size(); ++i) {
    const auto& c = record.contracts[i];
    RangeBounds b;
    try {
      b = parse_range_label(c.label);
    } catch (const Error& e) {
      mismatch(record, "contract " + c.contract_id + ": " + e.what());
    }
    std::optional<std::size_t> bin;
    if (!b.lower) {
      bin = 0;
    } else {
      for (std::size_t k = 0; k < partition.size(); ++k) {
        if (same_edge(partition.lower(k), *b.lower)) bin = k;
      }
    }
    if (!bin) mismatch(record, "label '" + c.label + "' matches no bin");
    const bool upper_ok = b.upper ? partition.bounded(*bin) && touches(*b.upper, partition.upper(*bin))
                                  : !partition.bounded(*bin);
    if (!upper_ok) mismatch(record, "label '" + c.label + "' does not match bin " + std::to_string(*bin));
    if (!used.insert(*bin).second) mismatch(record, "two contracts map to bin " + std::to_string(*bin));
    slot[i] = *bin;
  }
  return slot;
}

}  // namespace

BinPartition threshold_partition(std::vector<double> thresholds) {
  std::sort(thresholds.begin(), thresholds.end());
  if (thresholds.empty()) throw Error(ErrorCode::EmptyEdges, "no thresholds");
  if (std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end()) {
    throw Error(ErrorCode::DuplicateThreshold, "duplicate threshold");
  }
  if (thresholds.front() < 0) throw Error(ErrorCode::NonMonotonicEdges, "negative threshold");
  if (thresholds.front() > 0) thresholds.insert(thresholds.begin(), 0.0);
  return BinPartition::from_edges(std::move(thresholds));
}

ThresholdConversion thresholds_to_distribution(std::span<const ThresholdQuote> quotes, const BinPartition& partition) {
  if (quotes.empty()) throw Error(ErrorCode::EmptyEdges, "no threshold quotes");
  std::vector<ThresholdQuote> sorted(quotes.begin(), quotes.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (!(sorted[j].prob >= 0.0 && sorted[j].prob <= 1.0)) {
      throw Error(ErrorCode::InvalidDistribution, "threshold quote outside [0,1]");
    }
    if (j > 0 && sorted[j].threshold == sorted[j - 1].threshold) {
      throw Error(ErrorCode::DuplicateThreshold, "duplicate threshold " + std::to_string(sorted[j].threshold));
    }
  }
  std::vector<double> thresholds(sorted.size());
  std::transform(sorted.begin(), sorted.end(), thresholds.begin(), [](const auto& q) { return q.threshold; });
  if (!(threshold_partition(thresholds) == partition)) {
    throw Error(ErrorCode::ContractBinMismatch, "partition edges do not match the quoted thresholds");
  }

  std::vector<double> raw;
  raw.reserve(partition.size());
  if (sorted.front().threshold > 0) raw.push_back(1.0 - sorted.front().prob);
  double violation = 0.0;
  for (std::size_t j = 0; j + 1 < sorted.size(); ++j) {
    const double diff = sorted[j].prob - sorted[j + 1].prob;
    if (diff < 0) {
      violation += -diff;
      raw.push_back(0.0);
    } else {
      raw.push_back(diff);
    }
  }
  raw.push_back(sorted.back().prob);
  const double raw_sum = compensated_sum(raw);
  return ThresholdConversion{normalize(raw, partition), raw_sum, violation};
}

RangeConversion range_bins_to_distribution(std::span<const double> prices, const BinPartition& partition) {
  for (double p : prices) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidDistribution, "range price outside [0,1]");
  }
  return RangeConversion{normalize(prices, partition), compensated_sum(prices)};
}

BinPartition infer_partition(const MarketRecord& record) {
  if (record.structure == MarketStructure::Thresholds) {
    std::vector<double> thresholds;
    for (const auto& c : record.contracts) thresholds.push_back(parse_threshold_label(c.label));
    std::vector<double> check = thresholds;
    std::sort(check.begin(), check.end());
    if (std::adjacent_find(check.begin(), check.end()) != check.end()) {
      throw Error(ErrorCode::DuplicateThreshold, "market " + record.market_id + " repeats a threshold");
    }
    return threshold_partition(std::move(thresholds));
  }

  struct Bin {
    double lower;
    std::optional<double> upper;
  };
  std::vector<Bin> bins;
  bool has_floor_bin = false;
  for (const auto& c : record.contracts) {
    const RangeBounds b = parse_range_label(c.label);
    if (!b.lower) {
      if (has_floor_bin) mismatch(record, "two open-below bins");
      has_floor_bin = true;
      // The open-below bin starts at zero: targets are non-negative.
      bins.push_back(Bin{0.0, b.upper});
    } else {
      bins.push_back(Bin{*b.lower, b.upper});
    }
  }
  std::sort(bins.begin(), bins.end(), [](const Bin& a, const Bin& b) { return a.lower < b.lower; });
  std::vector<double> edges;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    edges.push_back(bins[i].lower);
    const bool last = i + 1 == bins.size();
    if (last && bins[i].upper) mismatch(record, "highest bin is not open-ended");
    if (!last && (!bins[i].upper || !touches(*bins[i].upper, bins[i + 1].lower))) {
      mismatch(record, "bins are not contiguous at " + std::to_string(bins[i].lower));
    }
  }
  return BinPartition::from_edges(std::move(edges));
}

SnapshotSeries snapshot_series(const MarketRecord& record, const BinPartition& partition, int fidelity_minutes) {
  if (fidelity_minutes < 1) throw Error(ErrorCode::ConfigError, "fidelity must be at least one minute");
  std::vector<double> thresholds;
  const std::vector<std::size_t> slot = map_contracts(record, partition, &thresholds);
  const std::int64_t step = std::int64_t{fidelity_minutes} * 60;
  auto floor_to_grid = [step](Timestamp t) {
    const std::int64_t s = to_unix(t);
    const std::int64_t r = ((s % step) + step) % step;
    return s - r;
  };

  std::set<std::int64_t> grid;
  for (const auto& c : record.contracts) {
    for (const auto& p : c.points) grid.insert(floor_to_grid(p.time));
  }

  const std::size_t n = record.contracts.size();
  std::vector<std::size_t> cursor(n, 0);
  std::vector<std::optional<double>> current(n);
  SnapshotSeries out;
  std::vector<double> values(n);
  for (const std::int64_t g : grid) {
    bool complete = true;
    for (std::size_t c = 0; c < n; ++c) {
      const auto& pts = record.contracts[c].points;
      while (cursor[c] < pts.size() && floor_to_grid(pts[cursor[c]].time) <= g) {
        current[c] = pts[cursor[c]].price;
        ++cursor[c];
      }
      if (!current[c]) complete = false;
    }
    if (!complete) continue;

    try {
      if (record.structure == MarketStructure::Thresholds) {
        std::vector<ThresholdQuote> quotes(n);
        for (std::size_t c = 0; c < n; ++c) quotes[c] = ThresholdQuote{thresholds[slot[c]], *current[c]};
        auto conv = thresholds_to_distribution(quotes, partition);
        out.snapshots.push_back(
            MarketSnapshot{from_unix(g), std::move(conv.dist), conv.raw_sum, conv.monotonicity_violation});
      } else {
        for (std::size_t c = 0; c < n; ++c) values[slot[c]] = *current[c];
        auto conv = range_bins_to_distribution(values, partition);
        out.snapshots.push_back(MarketSnapshot{from_unix(g), std::move(conv.dist), conv.raw_sum, 0.0});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateMass) throw;
      ++out.skipped_degenerate;
      spdlog::warn("market {}: skipping snapshot at {}: {}", record.market_id, format_rfc3339(from_unix(g)), e.what());
    }
  }
  return out;
}

}  // namespace pmeval
