#include "pmeval/surveillance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmeval/csv.hpp"
#include "pmeval/error.hpp"

namespace pmeval {

SurveillanceSeries::SurveillanceSeries(std::string target_key, std::vector<SurveillanceSnapshot> snapshots)
    : target_key_(std::move(target_key)), snapshots_(std::move(snapshots)) {
  std::stable_sort(snapshots_.begin(), snapshots_.end(),
                   [](const auto& a, const auto& b) { return a.published < b.published; });
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    const auto& s = snapshots_[i];
    if (s.target_key != target_key_) {
      throw Error(ErrorCode::SchemaError, "snapshot for '" + s.target_key + "' in series '" + target_key_ + "'");
    }
    if (!(s.as_of_value >= 0.0) || !std::isfinite(s.as_of_value)) {
      throw Error(ErrorCode::SchemaError, target_key_ + ": invalid value at " + format_rfc3339(s.published));
    }
    if (i > 0 && s.published == snapshots_[i - 1].published) {
      throw Error(ErrorCode::DuplicatePublication, target_key_ + ": two snapshots published at " +
                                                       format_rfc3339(s.published));
    }
  }
}

const SurveillanceSnapshot* SurveillanceSeries::latest_at_or_before(Timestamp t) const {
  const auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t,
                                   [](Timestamp v, const SurveillanceSnapshot& s) { return v < s.published; });
  return it == snapshots_.begin() ? nullptr : &*std::prev(it);
}

const SurveillanceSnapshot* SurveillanceSeries::first_at_or_after(Timestamp t) const {
  const auto it = std::lower_bound(snapshots_.begin(), snapshots_.end(), t,
                                   [](const SurveillanceSnapshot& s, Timestamp v) { return s.published < v; });
  return it == snapshots_.end() ? nullptr : &*it;
}

std::vector<double> SurveillanceSeries::history_as_of(Timestamp t) const {
  std::vector<double> out;
  for (const auto& s : snapshots_) {
    if (s.published > t) break;
    out.push_back(s.as_of_value);
  }
  return out;
}

SurveillanceStore ingest_snapshots(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::SchemaError, path.string() + ": no .csv files");
  } else if (std::filesystem::exists(path)) {
    files.push_back(path);
  } else {
    throw Error(ErrorCode::IoError, "no such file or directory: " + path.string());
  }

  // (target, published) -> snapshot, for cross-file dedup.
  std::map<std::string, std::map<Timestamp, SurveillanceSnapshot>> by_target;
  for (const auto& file : files) {
    const csv::Table table = csv::Table::read(file);
    const std::size_t c_target = table.require_column("target_key");
    const std::size_t c_pub = table.require_column("published");
    const std::size_t c_value = table.require_column("value");
    const std::size_t c_source = table.require_column("source");
    for (const auto& row : table.rows()) {
      const std::string where = table.source() + ":" + std::to_string(row.line);
      SurveillanceSnapshot snap;
      snap.target_key = row.fields[c_target];
      if (snap.target_key.empty()) throw Error(ErrorCode::SchemaError, where + ": empty target_key");
      try {
        snap.published = parse_timestamp_or_date(row.fields[c_pub]);
      } catch (const Error&) {
        throw Error(ErrorCode::SchemaError, where + ": bad published time '" + row.fields[c_pub] + "'");
      }
      snap.as_of_value = csv::parse_number(row.fields[c_value], table.source(), row.line, "value");
      if (!(snap.as_of_value >= 0.0) || !std::isfinite(snap.as_of_value)) {
        throw Error(ErrorCode::SchemaError, where + ": value must be a non-negative number");
      }
      snap.source = row.fields[c_source];

      auto& slot = by_target[snap.target_key];
      const auto [it, inserted] = slot.emplace(snap.published, snap);
      if (!inserted && it->second.as_of_value != snap.as_of_value) {
        throw Error(ErrorCode::DuplicatePublication, where + ": " + snap.target_key + " published at " +
                                                         format_rfc3339(snap.published) + " with conflicting values");
      }
    }
  }

  SurveillanceStore store;
  for (auto& [key, snaps] : by_target) {
    std::vector<SurveillanceSnapshot> list;
    list.reserve(snaps.size());
    for (auto& [_, s] : snaps) list.push_back(std::move(s));
    store.emplace(key, SurveillanceSeries(key, std::move(list)));
  }
  return store;
}

std::optional<double> value_as_of(const SurveillanceSeries& series, Timestamp t) {
  const auto* snap = series.latest_at_or_before(t);
  if (!snap) return std::nullopt;
  return snap->as_of_value;
}

Outcome resolve_outcome(const MarketRecord& market, const SurveillanceSeries& series, const BinPartition& partition) {
  const auto* settlement = series.first_at_or_after(market.resolution_time);
  if (!settlement) {
    throw Error(ErrorCode::Unresolved, "market " + market.market_id + ": no " + series.target_key() +
                                           " publication at or after " + format_rfc3339(market.resolution_time));
  }
  const double value = *value_as_of(series, settlement->published);
  return Outcome::resolve(value, partition);
}

}  // namespace pmeval
