#include "pmeval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {
namespace {

void check_index(std::size_t y, std::size_t k) {
  if (y >= k) {
    throw Error(ErrorCode::IndexOutOfRange, "outcome bin " + std::to_string(y) + " for " + std::to_string(k) + " bins");
  }
}

template <typename Dists, typename Get>
ScoreRecord score_many(const Dists& items, Get&& get_dist, const Outcome& outcome, std::string event_id,
                       std::string model_id) {
  if (items.empty()) throw Error(ErrorCode::EmptySnapshots, "event " + event_id + " has no forecasts to score");
  std::vector<double> b, l, c;
  b.reserve(items.size());
  l.reserve(items.size());
  c.reserve(items.size());
  for (const auto& item : items) {
    const PredictiveDistribution& d = get_dist(item);
    b.push_back(brier(d, outcome.bin_index));
    l.push_back(log_score(d, outcome.bin_index));
    c.push_back(crps_binned(d, outcome.bin_index));
  }
  // Sorting before the compensated sum makes the mean independent of input order.
  auto mean = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return compensated_sum(v) / static_cast<double>(v.size());
  };
  ScoreRecord rec;
  rec.event_id = std::move(event_id);
  rec.model_id = std::move(model_id);
  rec.brier = mean(b);
  rec.log_score = mean(l);
  rec.crps = mean(c);
  rec.n_snapshots = items.size();
  return rec;
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Brier: return "brier";
    case Metric::Log: return "log_score";
    case Metric::Crps: return "crps";
  }
  return "unknown";
}

Metric parse_metric(std::string_view text) {
  if (text == "brier") return Metric::Brier;
  if (text == "log" || text == "log_score") return Metric::Log;
  if (text == "crps") return Metric::Crps;
  throw Error(ErrorCode::ConfigError, "unknown metric '" + std::string(text) + "'");
}

double brier(std::span<const double> probs, std::size_t y) {
  check_index(y, probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double diff = probs[i] - (i == y ? 1.0 : 0.0);
    total += diff * diff;
  }
  return total;
}

double log_score(std::span<const double> probs, std::size_t y) {
  check_index(y, probs.size());
  return -std::log(std::max(probs[y], kLogClamp));
}

double crps_binned(std::span<const double> probs, const BinPartition& partition, std::size_t y) {
  check_index(y, probs.size());
  if (probs.size() != partition.size()) throw Error(ErrorCode::InvalidDistribution, "probs/partition size mismatch");
  double total = 0.0;
  double running = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    running += probs[i];
    const double f = std::min(running, 1.0);
    const double h = y <= i ? 1.0 : 0.0;
    total += (f - h) * (f - h) * partition.width(i);
  }
  return total;
}

double brier(const PredictiveDistribution& p, std::size_t y) { return brier(p.probs(), y); }
double log_score(const PredictiveDistribution& p, std::size_t y) { return log_score(p.probs(), y); }
double crps_binned(const PredictiveDistribution& p, std::size_t y) { return crps_binned(p.probs(), p.partition(), y); }

double score(Metric metric, std::span<const double> probs, const BinPartition& partition, std::size_t y) {
  switch (metric) {
    case Metric::Brier: return brier(probs, y);
    case Metric::Log: return log_score(probs, y);
    case Metric::Crps: return crps_binned(probs, partition, y);
  }
  return 0.0;
}

double score(Metric metric, const PredictiveDistribution& p, std::size_t y) {
  return score(metric, p.probs(), p.partition(), y);
}

double ScoreRecord::get(Metric m) const {
  switch (m) {
    case Metric::Brier: return brier;
    case Metric::Log: return log_score;
    case Metric::Crps: return crps;
  }
  return 0.0;
}

ScoreRecord score_event(std::span<const MarketSnapshot> snapshots, const Outcome& outcome, std::string event_id,
                        std::string model_id) {
  return score_many(snapshots, [](const MarketSnapshot& s) -> const PredictiveDistribution& { return s.dist; },
                    outcome, std::move(event_id), std::move(model_id));
}

ScoreRecord score_event(std::span<const PredictiveDistribution> forecasts, const Outcome& outcome,
                        std::string event_id, std::string model_id) {
  return score_many(forecasts, [](const PredictiveDistribution& d) -> const PredictiveDistribution& { return d; },
                    outcome, std::move(event_id), std::move(model_id));
}

ScoreRecord mean_record(std::span<const ScoreRecord> records, std::string event_id, std::string model_id) {
  if (records.empty()) throw Error(ErrorCode::EmptyEvents, "no records to average for " + model_id);
  ScoreRecord out;
  out.event_id = std::move(event_id);
  out.model_id = std::move(model_id);
  for (Metric m : kAllMetrics) {
    std::vector<double> v;
    for (const auto& r : records) v.push_back(r.get(m));
    std::sort(v.begin(), v.end());
    const double mean = compensated_sum(v) / static_cast<double>(v.size());
    if (m == Metric::Brier) out.brier = mean;
    if (m == Metric::Log) out.log_score = mean;
    if (m == Metric::Crps) out.crps = mean;
  }
  for (const auto& r : records) out.n_snapshots += r.n_snapshots;
  return out;
}

std::string_view to_string(PercentileConvention c) { return c == PercentileConvention::Strict ? "strict" : "weak"; }

double percentile_rank(double candidate_mean, std::span<const double> hub_means, PercentileConvention convention) {
  if (hub_means.empty()) throw Error(ErrorCode::EmptyHub, "no hub models to rank against");
  const auto beaten = std::count_if(hub_means.begin(), hub_means.end(), [&](double m) {
    return convention == PercentileConvention::Strict ? m > candidate_mean : m >= candidate_mean;
  });
  return 100.0 * static_cast<double>(beaten) / static_cast<double>(hub_means.size());
}

}  // namespace pmeval
