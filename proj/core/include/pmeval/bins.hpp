#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmeval {

/// Absolute tolerance on the total mass of a predictive distribution.
inline constexpr double kMassTolerance = 1e-9;

/// Minimum raw mass accepted by normalize(); below it a snapshot is treated as dead.
inline constexpr double kNormalizationFloor = 0.05;

/// Ordered, disjoint bins covering [edges.front(), +inf). Bin i < K-1 is
/// [edges[i], edges[i+1]); the last bin is [edges.back(), +inf).
class BinPartition {
 public:
  /// Throws EmptyEdges / NonMonotonicEdges.
  static BinPartition from_edges(std::vector<double> edges);

  std::size_t size() const noexcept { return edges_.size(); }
  std::span<const double> edges() const noexcept { return edges_; }

  double lower(std::size_t bin) const { return edges_.at(bin); }
  /// +inf for the top bin.
  double upper(std::size_t bin) const;
  bool bounded(std::size_t bin) const { return bin + 1 < edges_.size(); }
  /// Zero for the open top bin.
  double width(std::size_t bin) const;

  /// Bin containing `value`. A value equal to a shared edge belongs to the higher bin.
  /// Throws BelowPartition when value < edges.front().
  std::size_t bin_of(double value) const;

  bool operator==(const BinPartition&) const = default;

 private:
  explicit BinPartition(std::vector<double> edges) : edges_(std::move(edges)) {}
  std::vector<double> edges_;
};

inline BinPartition make_partition(std::vector<double> edges) {
  return BinPartition::from_edges(std::move(edges));
}

inline std::size_t map_outcome_to_bin(double value, const BinPartition& partition) {
  return partition.bin_of(value);
}

/// Probability vector over a BinPartition.
class PredictiveDistribution {
 public:
  /// Validates one prob per bin, each in [0,1], summing to 1 within kMassTolerance.
  /// Throws InvalidDistribution.
  PredictiveDistribution(BinPartition partition, std::vector<double> probs);

  const BinPartition& partition() const noexcept { return partition_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t bin) const { return probs_[bin]; }
  std::size_t size() const noexcept { return probs_.size(); }

  static PredictiveDistribution point_mass(BinPartition partition, std::size_t bin);

 private:
  BinPartition partition_;
  std::vector<double> probs_;
};

/// weights / sum(weights). Throws NegativeWeight, or DegenerateMass when the sum is
/// below kNormalizationFloor.
PredictiveDistribution normalize(std::span<const double> weights, const BinPartition& partition);

/// Running sum of probabilities; the last entry is pinned to 1.
std::vector<double> cdf(const PredictiveDistribution& dist);
std::vector<double> cdf(std::span<const double> probs);

struct Outcome {
  double value;
  std::size_t bin_index;

  static Outcome resolve(double value, const BinPartition& partition) {
    return Outcome{value, partition.bin_of(value)};
  }
};

/// Neumaier-compensated sum; mean aggregation uses it so ordering effects stay < 1e-12.
double compensated_sum(std::span<const double> values);

}  // namespace pmeval
