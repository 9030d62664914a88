#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pmeval/bins.hpp"

namespace pmeval::test {

inline std::filesystem::path source_dir() { return PMEVAL_SOURCE_DIR; }
inline std::filesystem::path fixture_dir(const std::string& name) { return source_dir() / "data" / "fixtures" / name; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pmeval-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Edges starting at `start` with widths in [min_width, max_width].
inline BinPartition random_partition(std::mt19937_64& rng, std::size_t bins, double start = 0.0,
                                     double min_width = 0.1, double max_width = 10.0) {
  std::uniform_real_distribution<double> width(min_width, max_width);
  std::vector<double> edges{start};
  while (edges.size() < bins) edges.push_back(edges.back() + width(rng));
  return BinPartition::from_edges(std::move(edges));
}

/// Dirichlet(1) draw with an occasional exact zero.
inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t k, double zero_chance = 0.1) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& x : w) {
    x = u(rng) < zero_chance ? 0.0 : e(rng);
    total += x;
  }
  if (total == 0.0) {
    w[0] = 1.0;
    total = 1.0;
  }
  for (auto& x : w) x /= total;
  return w;
}

inline PredictiveDistribution random_distribution(std::mt19937_64& rng, const BinPartition& partition) {
  return normalize(random_probs(rng, partition.size()), partition);
}

}  // namespace pmeval::test
