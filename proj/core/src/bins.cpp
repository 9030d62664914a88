#include "pmeval/bins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {

BinPartition BinPartition::from_edges(std::vector<double> edges) {
  if (edges.empty()) throw Error(ErrorCode::EmptyEdges, "bin partition needs at least one edge");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) {
      throw Error(ErrorCode::NonMonotonicEdges, "edge " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw Error(ErrorCode::NonMonotonicEdges,
                  "edges must be strictly increasing (edge " + std::to_string(i) + ")");
    }
  }
  return BinPartition(std::move(edges));
}

double BinPartition::upper(std::size_t bin) const {
  if (bin >= edges_.size()) throw Error(ErrorCode::IndexOutOfRange, "bin " + std::to_string(bin));
  return bounded(bin) ? edges_[bin + 1] : std::numeric_limits<double>::infinity();
}

double BinPartition::width(std::size_t bin) const {
  if (bin >= edges_.size()) throw Error(ErrorCode::IndexOutOfRange, "bin " + std::to_string(bin));
  return bounded(bin) ? edges_[bin + 1] - edges_[bin] : 0.0;
}

std::size_t BinPartition::bin_of(double value) const {
  if (std::isnan(value) || value < edges_.front()) {
    throw Error(ErrorCode::BelowPartition,
                "value " + std::to_string(value) + " below partition floor " + std::to_string(edges_.front()));
  }
  // upper_bound: first edge strictly greater, so an exact edge hit lands in the higher bin.
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), value);
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

PredictiveDistribution::PredictiveDistribution(BinPartition partition, std::vector<double> probs)
    : partition_(std::move(partition)), probs_(std::move(probs)) {
  if (probs_.size() != partition_.size()) {
    throw Error(ErrorCode::InvalidDistribution, "expected " + std::to_string(partition_.size()) +
                                                    " probabilities, got " + std::to_string(probs_.size()));
  }
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) {
      throw Error(ErrorCode::InvalidDistribution,
                  "probability " + std::to_string(i) + " = " + std::to_string(probs_[i]) + " outside [0,1]");
    }
  }
  const double total = compensated_sum(probs_);
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::InvalidDistribution, "probabilities sum to " + std::to_string(total));
  }
}

PredictiveDistribution PredictiveDistribution::point_mass(BinPartition partition, std::size_t bin) {
  if (bin >= partition.size()) throw Error(ErrorCode::IndexOutOfRange, "bin " + std::to_string(bin));
  std::vector<double> probs(partition.size(), 0.0);
  probs[bin] = 1.0;
  return PredictiveDistribution(std::move(partition), std::move(probs));
}

PredictiveDistribution normalize(std::span<const double> weights, const BinPartition& partition) {
  if (weights.size() != partition.size()) {
    throw Error(ErrorCode::InvalidDistribution, "expected " + std::to_string(partition.size()) +
                                                    " weights, got " + std::to_string(weights.size()));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " = " + std::to_string(weights[i]));
    }
  }
  const double total = compensated_sum(weights);
  if (total < kNormalizationFloor) {
    throw Error(ErrorCode::DegenerateMass, "total mass " + std::to_string(total) + " below floor");
  }
  std::vector<double> probs(weights.size());
  std::transform(weights.begin(), weights.end(), probs.begin(),
                 [total](double w) { return std::min(1.0, w / total); });
  return PredictiveDistribution(partition, std::move(probs));
}

std::vector<double> cdf(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  double running = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double t = running + probs[i];
    comp += std::abs(running) >= std::abs(probs[i]) ? (running - t) + probs[i] : (probs[i] - t) + running;
    running = t;
    out[i] = std::min(1.0, running + comp);
  }
  if (!out.empty()) out.back() = 1.0;
  return out;
}

std::vector<double> cdf(const PredictiveDistribution& dist) { return cdf(dist.probs()); }

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace pmeval
