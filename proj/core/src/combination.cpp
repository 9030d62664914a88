#include "pmeval/combination.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmeval/error.hpp"

namespace pmeval {

CombinationCurve optimize_alpha(std::span<const PairedEvent> events, Metric metric, double grid_step) {
  if (events.empty()) throw Error(ErrorCode::EmptyEvents, "no events to combine");
  if (!(grid_step > 0.0) || grid_step > 1.0) throw Error(ErrorCode::InvalidGrid, "grid step must lie in (0, 1]");
  const double steps_real = 1.0 / grid_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real) {
    throw Error(ErrorCode::InvalidGrid, "grid step " + std::to_string(grid_step) + " does not divide 1");
  }
  std::vector<double> weights;
  for (const auto& e : events) {
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) throw Error(ErrorCode::InvalidGrid, "event weights must be positive");
    weights.push_back(e.weight);
    if (!(e.a.partition() == e.b.partition())) {
      throw Error(ErrorCode::InvalidDistribution, "paired forecasts use different partitions");
    }
  }
  const double total_weight = compensated_sum(weights);

  CombinationCurve curve;
  curve.metric = metric;
  curve.alphas.resize(steps + 1);
  curve.mean_scores.resize(steps + 1);
  std::vector<double> q;
  std::vector<double> per_event(events.size());
  for (std::size_t s = 0; s <= steps; ++s) {
    const double alpha = static_cast<double>(s) / static_cast<double>(steps);
    curve.alphas[s] = alpha;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const auto pa = events[e].a.probs();
      const auto pb = events[e].b.probs();
      q.resize(pa.size());
      for (std::size_t i = 0; i < pa.size(); ++i) q[i] = alpha * pa[i] + (1.0 - alpha) * pb[i];
      per_event[e] = events[e].weight * score(metric, q, events[e].a.partition(), events[e].outcome_bin);
    }
    curve.mean_scores[s] = compensated_sum(per_event) / total_weight;
  }

  // Walk from alpha = 1 downward; only a strictly better score moves the optimum.
  std::size_t best = steps;
  for (std::size_t s = steps; s-- > 0;) {
    if (curve.mean_scores[s] < curve.mean_scores[best] - kAlphaTieTolerance) best = s;
  }
  curve.alpha_star = curve.alphas[best];
  curve.best_score = curve.mean_scores[best];
  return curve;
}

}  // namespace pmeval
