#include <benchmark/benchmark.h>

#include <random>

#include "pmeval/combination.hpp"
#include "pmeval/scoring.hpp"

using namespace pmeval;

namespace {

BinPartition partition_of(std::size_t k) {
  std::vector<double> edges;
  for (std::size_t i = 0; i < k; ++i) edges.push_back(1000.0 * static_cast<double>(i));
  return make_partition(edges);
}

PredictiveDistribution random_dist(std::mt19937_64& rng, const BinPartition& part) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(part.size());
  for (auto& x : w) x = e(rng);
  return normalize(w, part);
}

void BM_Score(benchmark::State& state, Metric metric) {
  std::mt19937_64 rng(1);
  const auto part = partition_of(static_cast<std::size_t>(state.range(0)));
  const auto p = random_dist(rng, part);
  std::size_t y = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score(metric, p, y));
    y = (y + 1) % part.size();
  }
}
BENCHMARK_CAPTURE(BM_Score, brier, Metric::Brier)->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_Score, log, Metric::Log)->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_Score, crps, Metric::Crps)->Arg(8)->Arg(64);

void BM_OptimizeAlpha(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto part = partition_of(8);
  std::vector<PairedEvent> events;
  for (int i = 0; i < state.range(0); ++i) {
    events.push_back({random_dist(rng, part), random_dist(rng, part), rng() % part.size(), 1.0});
  }
  for (auto _ : state) benchmark::DoNotOptimize(optimize_alpha(events, Metric::Crps, 0.01));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OptimizeAlpha)->Arg(16)->Arg(500);

}  // namespace
