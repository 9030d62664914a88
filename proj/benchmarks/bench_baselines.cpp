#include <benchmark/benchmark.h>

#include <random>

#include "pmeval/arima.hpp"
#include "pmeval/quantiles.hpp"

using namespace pmeval;

namespace {

void BM_QuantilesToBins(benchmark::State& state) {
  const double levels[] = {0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                           0.55, 0.6,   0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99};
  QuantileForecast f;
  for (std::size_t j = 0; j < std::size(levels); ++j) {
    f.levels.push_back(levels[j]);
    f.values.push_back(150000.0 + 2000.0 * static_cast<double>(j));
  }
  std::vector<double> edges;
  for (int i = 0; i < state.range(0); ++i) edges.push_back(140000.0 + 5000.0 * i);
  const auto part = make_partition(edges);
  for (auto _ : state) benchmark::DoNotOptimize(quantiles_to_bins(f, part));
}
BENCHMARK(BM_QuantilesToBins)->Arg(8)->Arg(32);

std::vector<double> ar1(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> x{0.0};
  while (x.size() < n) x.push_back(0.8 * x.back() + e(rng));
  return x;
}

void BM_FitArima(benchmark::State& state) {
  const auto x = ar1(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_arima(x, {1, 0, 1}));
}
BENCHMARK(BM_FitArima)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_FitAutoArima(benchmark::State& state) {
  const auto x = ar1(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_auto_arima(x));
}
BENCHMARK(BM_FitAutoArima)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
