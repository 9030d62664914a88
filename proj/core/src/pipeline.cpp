#include "pmeval/pipeline.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include "pmeval/csv.hpp"
#include "pmeval/error.hpp"
#include "pmeval/quantiles.hpp"
#include "pmeval/surveillance.hpp"
#include "pmeval/svg.hpp"

namespace pmeval {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      {
        std::lock_guard lock(mu);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (count <= 1) {
    run();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < count; ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Hub forecast for the event: target end date (reference + 7h days) is the latest one
/// on or before the resolution date and at most six days before it.
const QuantileForecast* match_hub_forecast(const HubForecasts& hub, const std::string& model, const RunConfig& cfg,
                                           Timestamp resolution) {
  using namespace std::chrono;
  const sys_days resolution_day = floor<days>(resolution);
  const QuantileForecast* best = nullptr;
  sys_days best_end{};
  for (auto it = hub.lower_bound(HubForecastKey{model, cfg.hub_target, "", 0});
       it != hub.end() && it->first.model_id == model && it->first.target == cfg.hub_target; ++it) {
    if (it->first.horizon != cfg.hub_horizon) continue;
    const sys_days end = floor<days>(it->second.reference_time) + days{7 * it->first.horizon};
    if (end > resolution_day || end < resolution_day - days{6}) continue;
    if (!best || end > best_end) {
      best = &it->second;
      best_end = end;
    }
  }
  return best;
}

std::vector<std::string> hub_models(const HubForecasts& hub) {
  std::set<std::string> ids;
  for (const auto& [key, _] : hub) ids.insert(key.model_id);
  return {ids.begin(), ids.end()};
}

std::optional<PreparedEvent> prepare_one(const MarketRecord& record, const RunConfig& cfg,
                                         const SurveillanceSeries& truth, const HubForecasts* hub,
                                         const std::vector<std::string>& models) {
  BinPartition partition = infer_partition(record);
  SnapshotSeries snaps = snapshot_series(record, partition, cfg.fidelity_minutes);
  if (snaps.snapshots.empty()) {
    spdlog::warn("market {}: no complete snapshot; skipped", record.market_id);
    return std::nullopt;
  }
  std::optional<Outcome> outcome;
  try {
    outcome = resolve_outcome(record, truth, partition);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unresolved) throw;
    spdlog::warn("{}; skipped", e.what());
    return std::nullopt;
  }

  PreparedEvent ev{record.market_id, record, partition, std::move(snaps), *outcome, {}, std::nullopt, std::nullopt};

  if (hub) {
    for (const auto& model : models) {
      const QuantileForecast* qf = match_hub_forecast(*hub, model, cfg, record.resolution_time);
      if (!qf) continue;
      const auto last = value_as_of(truth, qf->reference_time);
      if (!last) {
        spdlog::warn("market {}: no surveillance value before {} reference date; {} skipped", record.market_id,
                     format_date(qf->reference_time), model);
        continue;
      }
      const QuantileForecast cumulative = incident_to_cumulative(*qf, *last, cfg.kappa);
      ev.hub.emplace(model, quantiles_to_bins(cumulative, partition));
    }
  }

  if (cfg.arima_enabled) {
    const Timestamp fit_time = ev.snapshots.snapshots.front().time;
    const std::vector<double> history = truth.history_as_of(fit_time);
    const auto* last_pub = truth.latest_at_or_before(fit_time);
    const auto* settle = truth.first_at_or_after(record.resolution_time);
    if (history.size() < cfg.arima.min_length || !last_pub || !settle) {
      spdlog::warn("market {}: {} publications before {}; ARIMA baseline skipped", record.market_id, history.size(),
                   format_rfc3339(fit_time));
    } else {
      const auto gap = std::chrono::duration_cast<std::chrono::hours>(settle->published - last_pub->published);
      const int horizon = std::max(1, static_cast<int>(std::lround(gap.count() / (24.0 * 7.0))));
      ArimaModel model = fit_auto_arima(history, cfg.arima);
      const ArimaForecast fc = arima_forecast(model, history, horizon);
      ev.arima = gaussian_to_bins(fc.mean.back(), fc.variance.back(), partition);
      ev.arima_model = std::move(model);
    }
  }
  return ev;
}

std::string scores_csv(const std::vector<ScoreRecord>& rows) {
  std::string out = "event_id,model_id,brier,log_score,crps,n_snapshots\n";
  for (const auto& r : rows) {
    out += csv::join_row({r.event_id, r.model_id, csv::format_number(r.brier), csv::format_number(r.log_score),
                          csv::format_number(r.crps), std::to_string(r.n_snapshots)});
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) config_error(path.string() + ": config must be a JSON object");
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  static const std::set<std::string> known = {
      "disease",     "fixture",         "markets",   "surveillance_dir", "target_key", "hub_forecasts",
      "hub_target",  "hub_location",    "hub_horizon", "ensemble_model", "cache_dir",  "offline",
      "fidelity_minutes", "kappa",      "grid_step", "output_dir",       "seed",       "workers",
      "arima",       "percentile_convention"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) config_error(path.string() + ": unknown key '" + key + "'");
  }

  RunConfig cfg;
  try {
    if (doc.contains("disease")) cfg.disease = parse_disease(doc["disease"].get<std::string>());
    if (doc.contains("fixture")) cfg.fixture = resolve(base, doc["fixture"].get<std::string>());
    if (doc.contains("markets")) cfg.manifests = resolve(base, doc["markets"].get<std::string>());
    if (doc.contains("surveillance_dir")) cfg.surveillance_dir = resolve(base, doc["surveillance_dir"].get<std::string>());
    if (doc.contains("target_key")) cfg.target_key = doc["target_key"].get<std::string>();
    if (doc.contains("hub_forecasts")) cfg.hub_forecasts = resolve(base, doc["hub_forecasts"].get<std::string>());
    if (doc.contains("hub_target")) cfg.hub_target = doc["hub_target"].get<std::string>();
    if (doc.contains("hub_location")) cfg.hub_location = doc["hub_location"].get<std::string>();
    if (doc.contains("hub_horizon")) cfg.hub_horizon = doc["hub_horizon"].get<int>();
    if (doc.contains("ensemble_model")) cfg.ensemble_model = doc["ensemble_model"].get<std::string>();
    if (doc.contains("cache_dir")) cfg.cache_dir = resolve(base, doc["cache_dir"].get<std::string>());
    if (doc.contains("offline")) cfg.offline = doc["offline"].get<bool>();
    if (doc.contains("fidelity_minutes")) cfg.fidelity_minutes = doc["fidelity_minutes"].get<int>();
    if (doc.contains("kappa")) cfg.kappa = doc["kappa"].get<double>();
    if (doc.contains("grid_step")) cfg.grid_step = doc["grid_step"].get<double>();
    if (doc.contains("output_dir")) cfg.output_dir = resolve(base, doc["output_dir"].get<std::string>());
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("workers")) cfg.workers = doc["workers"].get<int>();
    if (doc.contains("percentile_convention")) {
      const auto text = doc["percentile_convention"].get<std::string>();
      if (text == "strict") cfg.percentile = PercentileConvention::Strict;
      else if (text == "weak") cfg.percentile = PercentileConvention::Weak;
      else config_error("percentile_convention must be 'strict' or 'weak'");
    }
    if (doc.contains("arima")) {
      const json& a = doc["arima"];
      if (a.contains("enabled")) cfg.arima_enabled = a["enabled"].get<bool>();
      if (a.contains("max_p")) cfg.arima.max_p = a["max_p"].get<int>();
      if (a.contains("max_q")) cfg.arima.max_q = a["max_q"].get<int>();
      if (a.contains("max_d")) cfg.arima.max_d = a["max_d"].get<int>();
      if (a.contains("sigma2_floor")) cfg.arima.sigma2_floor = a["sigma2_floor"].get<double>();
      if (a.contains("min_length")) cfg.arima.min_length = a["min_length"].get<std::size_t>();
      if (a.contains("max_order")) cfg.arima.max_order = a["max_order"].get<int>();
      if (a.contains("search")) {
        const auto text = a["search"].get<std::string>();
        if (text == "stepwise") cfg.arima.search = OrderSearch::Stepwise;
        else if (text == "grid") cfg.arima.search = OrderSearch::Grid;
        else config_error("arima.search must be 'stepwise' or 'grid'");
      }
    }
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(path.string() + ": " + e.what());
  }
  return cfg;
}

void RunConfig::validate() const {
  if (!fixture && !manifests) config_error("config needs 'fixture' or 'markets'");
  if (fixture && !fs::exists(*fixture)) config_error("fixture not found: " + fixture->string());
  if (!fixture && manifests && !fs::exists(*manifests)) config_error("market manifests not found: " + manifests->string());
  if (!fixture && offline && !fs::is_directory(cache_dir)) {
    config_error("offline mode needs a fixture or an existing cache dir (" + cache_dir.string() + ")");
  }
  if (surveillance_dir.empty() || !fs::exists(surveillance_dir)) {
    config_error("surveillance dir not found: '" + surveillance_dir.string() + "'");
  }
  if (target_key.empty()) config_error("target_key is required");
  if (hub_forecasts && !fs::exists(*hub_forecasts)) config_error("hub forecasts not found: " + hub_forecasts->string());
  if (fidelity_minutes < 1) config_error("fidelity_minutes must be >= 1");
  if (!(kappa > 0.0)) config_error("kappa must be positive");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) config_error("grid_step must lie in (0, 1]");
  if (workers < 1) config_error("workers must be >= 1");
  if (hub_horizon < 0) config_error("hub_horizon must be >= 0");
  if (arima.max_p < 0 || arima.max_q < 0 || arima.max_d < 0 || arima.max_order < 0 || !(arima.sigma2_floor > 0.0)) {
    config_error("invalid ARIMA grid bounds");
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) config_error("output dir not writable: " + output_dir.string());
}

std::vector<MarketRecord> load_markets(const RunConfig& cfg) {
  if (cfg.fixture) return load_fixture(*cfg.fixture);
  const auto manifests = load_manifests(*cfg.manifests);
  const MarketCache cache(cfg.cache_dir);
  std::vector<MarketRecord> out;
  out.reserve(manifests.size());
  for (const auto& m : manifests) {
    if (auto rec = cache.load(m.market_id)) {
      out.push_back(std::move(*rec));
    } else {
      throw Error(ErrorCode::CacheMiss, "market " + m.market_id + " is not cached; run `pmeval fetch` first");
    }
  }
  return out;
}

std::vector<PreparedEvent> prepare_events(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<MarketRecord> markets = load_markets(cfg);
  const SurveillanceStore store = ingest_snapshots(cfg.surveillance_dir);
  const auto it = store.find(cfg.target_key);
  if (it == store.end()) config_error("no surveillance series for target '" + cfg.target_key + "'");
  std::optional<HubForecasts> hub;
  std::vector<std::string> models;
  if (cfg.hub_forecasts) {
    hub = read_hub_forecasts(*cfg.hub_forecasts, cfg.hub_location);
    models = hub_models(*hub);
  }

  std::vector<std::optional<PreparedEvent>> slots(markets.size());
  parallel_for(markets.size(), cfg.workers, [&](std::size_t i) {
    if (markets[i].disease != cfg.disease) {
      spdlog::warn("market {} is {} but the run is {}; skipped", markets[i].market_id, to_string(markets[i].disease),
                   to_string(cfg.disease));
      return;
    }
    slots[i] = prepare_one(markets[i], cfg, it->second, hub ? &*hub : nullptr, models);
  });
  std::vector<PreparedEvent> events;
  for (auto& s : slots) {
    if (s) events.push_back(std::move(*s));
  }
  return events;
}

std::string run_metadata(const RunConfig& cfg) {
  json meta;
  meta["disease"] = std::string(to_string(cfg.disease));
  meta["target_key"] = cfg.target_key;
  meta["log_score"] = {{"base", "natural"}, {"clamp_epsilon", kLogClamp}};
  meta["crps_convention"] =
      "sum over bounded bins of (F_i - 1{y <= i})^2 * bin width; open top bin contributes 0; units = target units";
  meta["percentile_convention"] = {{"primary", std::string(to_string(cfg.percentile))},
                                   {"strict", "percent of hub models with a strictly higher mean score"},
                                   {"weak", "percent of hub models with a higher or equal mean score"}};
  meta["normalization_floor"] = kNormalizationFloor;
  meta["price_field"] = "prices-history 'p' as returned by the API (no bid/ask/mid adjustment)";
  meta["snapshot_alignment"] = "observed timestamps floored to the fidelity grid, previous-tick fill";
  meta["threshold_monotonicity"] = "negative adjacent differences clamped to 0, then renormalized";
  meta["date_only_publication_time"] = "12:00 UTC";
  meta["settlement"] = "first surveillance publication at or after resolution_time";
  meta["fidelity_minutes"] = cfg.fidelity_minutes;
  meta["kappa"] = cfg.kappa;
  meta["grid_step"] = cfg.grid_step;
  meta["alpha_tie_break"] = "toward larger alpha (the ensemble)";
  meta["seed"] = cfg.seed;
  meta["hub"] = {{"target", cfg.hub_target}, {"horizon_weeks", cfg.hub_horizon}, {"ensemble_model", cfg.ensemble_model},
                 {"tail_rule", "tail mass assigned to the bins of the extreme quantiles"}};
  meta["arima"] = {{"enabled", cfg.arima_enabled},
                   {"max_p", cfg.arima.max_p},
                   {"max_q", cfg.arima.max_q},
                   {"max_d", cfg.arima.max_d},
                   {"search", cfg.arima.search == OrderSearch::Stepwise ? "stepwise" : "grid"},
                   {"max_order", cfg.arima.max_order},
                   {"sigma2_floor", cfg.arima.sigma2_floor},
                   {"differencing", "augmented Dickey-Fuller, 5% level"},
                   {"selection", "AIC = 2k - 2 lnL, k = p + q + 2"}};
  return meta.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

StagedOutput::StagedOutput(fs::path output_dir, const std::string& stage_name) : output_dir_(std::move(output_dir)) {
  staging_ = output_dir_ / (".staging-" + stage_name + "-" + std::to_string(::getpid()));
  std::error_code ec;
  fs::remove_all(staging_, ec);
  fs::create_directories(staging_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + staging_.string() + ": " + ec.message());
}

StagedOutput::~StagedOutput() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

void StagedOutput::write(const std::string& file_name, const std::string& contents) {
  std::ofstream out(staging_ / file_name, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (staging_ / file_name).string());
  out << contents;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "short write to " + (staging_ / file_name).string());
  files_.push_back(file_name);
}

void StagedOutput::commit() {
  for (const auto& name : files_) {
    std::error_code ec;
    fs::rename(staging_ / name, output_dir_ / name, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot publish " + (output_dir_ / name).string() + ": " + ec.message());
  }
  committed_ = true;
}

// ---------------------------------------------------------------------------

EvaluateResult cmd_evaluate(const RunConfig& cfg) {
  const std::vector<PreparedEvent> events = prepare_events(cfg);
  if (events.empty()) throw Error(ErrorCode::EmptyEvents, "no scorable events");

  EvaluateResult result;
  std::map<std::string, std::vector<ScoreRecord>> by_model;
  for (const auto& ev : events) {
    std::vector<ScoreRecord> rows;
    rows.push_back(score_event(ev.snapshots.snapshots, ev.outcome, ev.event_id, kMarketModelId));
    for (const auto& [model, dist] : ev.hub) {
      rows.push_back(score_event(std::span<const PredictiveDistribution>(&dist, 1), ev.outcome, ev.event_id, model));
    }
    if (ev.arima) {
      rows.push_back(score_event(std::span<const PredictiveDistribution>(&*ev.arima, 1), ev.outcome, ev.event_id,
                                 kArimaModelId));
    }
    for (auto& r : rows) {
      by_model[r.model_id].push_back(r);
      result.per_event.push_back(std::move(r));
    }
  }

  // Market first, hub models by id, ARIMA last.
  std::vector<std::string> order = {kMarketModelId};
  for (const auto& [model, _] : by_model) {
    if (model != kMarketModelId && model != kArimaModelId) order.push_back(model);
  }
  if (by_model.count(kArimaModelId)) order.emplace_back(kArimaModelId);
  for (const auto& model : order) result.aggregate.push_back(mean_record(by_model.at(model), "ALL", model));

  std::vector<const ScoreRecord*> hub_individual;
  for (const auto& agg : result.aggregate) {
    if (agg.model_id != kMarketModelId && agg.model_id != kArimaModelId && agg.model_id != cfg.ensemble_model) {
      hub_individual.push_back(&agg);
    }
  }
  if (!hub_individual.empty()) {
    for (Metric metric : kAllMetrics) {
      std::vector<double> hub_means;
      for (const auto* h : hub_individual) hub_means.push_back(h->get(metric));
      for (const auto& agg : result.aggregate) {
        const bool candidate = agg.model_id == kMarketModelId || agg.model_id == kArimaModelId ||
                               agg.model_id == cfg.ensemble_model;
        if (!candidate) continue;
        result.ranks.push_back(RankRow{metric, agg.model_id, agg.get(metric),
                                       percentile_rank(agg.get(metric), hub_means, PercentileConvention::Strict),
                                       percentile_rank(agg.get(metric), hub_means, PercentileConvention::Weak),
                                       hub_means.size()});
      }
    }
  }

  std::vector<ScoreRecord> all = result.per_event;
  all.insert(all.end(), result.aggregate.begin(), result.aggregate.end());
  std::string ranks = "metric,model_id,mean_score,percentile_strict,percentile_weak,hub_models\n";
  for (const auto& r : result.ranks) {
    ranks += csv::join_row({std::string(to_string(r.metric)), r.model_id, csv::format_number(r.mean_score),
                            csv::format_number(r.percentile_strict), csv::format_number(r.percentile_weak),
                            std::to_string(r.hub_models)});
  }
  StagedOutput out(cfg.output_dir, "evaluate");
  out.write("scores.csv", scores_csv(all));
  out.write("ranks.csv", ranks);
  out.write("metadata.json", run_metadata(cfg));
  out.commit();
  return result;
}

std::vector<CombinationCurve> cmd_combine(const RunConfig& cfg) {
  if (!cfg.hub_forecasts) config_error("combine needs hub_forecasts");
  const std::vector<PreparedEvent> events = prepare_events(cfg);
  std::vector<PairedEvent> pairs;
  std::size_t used_events = 0;
  for (const auto& ev : events) {
    const auto ens = ev.hub.find(cfg.ensemble_model);
    if (ens == ev.hub.end()) continue;
    ++used_events;
    const double w = 1.0 / static_cast<double>(ev.snapshots.snapshots.size());
    for (const auto& snap : ev.snapshots.snapshots) pairs.push_back(PairedEvent{ens->second, snap.dist, ev.outcome.bin_index, w});
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyEvents, "no event has both '" + cfg.ensemble_model + "' and market forecasts");
  spdlog::info("combining {} events ({} market snapshots)", used_events, pairs.size());

  std::vector<CombinationCurve> curves;
  for (Metric m : kAllMetrics) curves.push_back(optimize_alpha(pairs, m, cfg.grid_step));

  std::string curve_csv = "alpha,brier,log_score,crps\n";
  for (std::size_t i = 0; i < curves[0].alphas.size(); ++i) {
    curve_csv += csv::join_row({csv::format_number(curves[0].alphas[i]), csv::format_number(curves[0].mean_scores[i]),
                                csv::format_number(curves[1].mean_scores[i]),
                                csv::format_number(curves[2].mean_scores[i])});
  }
  std::string star_csv = "metric,alpha_star,best_score,score_alpha_1,score_alpha_0,n_events\n";
  std::vector<svg::LinePanel> panels;
  for (const auto& c : curves) {
    star_csv += csv::join_row({std::string(to_string(c.metric)), csv::format_number(c.alpha_star),
                               csv::format_number(c.best_score), csv::format_number(c.mean_scores.back()),
                               csv::format_number(c.mean_scores.front()), std::to_string(used_events)});
    char label[64];
    std::snprintf(label, sizeof label, "alpha* = %.2f", c.alpha_star);
    panels.push_back(svg::LinePanel{std::string(to_string(c.metric)), "alpha (ensemble weight)", "mean score",
                                    {svg::Series{"", c.alphas, c.mean_scores, "#1f77b4"}},
                                    {svg::Marker{label, c.alpha_star, "#d62728"}}});
  }
  StagedOutput out(cfg.output_dir, "combine");
  out.write("alpha_curve.csv", curve_csv);
  out.write("alpha_star.csv", star_csv);
  out.write("alpha_curve.svg", svg::render_lines(panels));
  out.commit();
  return curves;
}

DiagnoseResult cmd_diagnose(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<MarketRecord> markets = load_markets(cfg);
  const SurveillanceStore store = ingest_snapshots(cfg.surveillance_dir);
  const auto truth = store.find(cfg.target_key);
  if (truth == store.end()) config_error("no surveillance series for target '" + cfg.target_key + "'");

  struct PerMarket {
    std::vector<ImpossibleMassPoint> impossible;
    std::vector<ViolationPoint> violations;
  };
  std::vector<PerMarket> per(markets.size());
  parallel_for(markets.size(), cfg.workers, [&](std::size_t i) {
    const MarketRecord& rec = markets[i];
    const BinPartition partition = infer_partition(rec);
    const SnapshotSeries series = snapshot_series(rec, partition, cfg.fidelity_minutes);
    for (const auto& snap : series.snapshots) {
      if (rec.structure == MarketStructure::Thresholds) {
        per[i].violations.push_back({rec.market_id, snap.time, snap.raw_sum, snap.monotonicity_violation});
      }
      const auto floor = value_as_of(truth->second, snap.time);
      if (!floor) continue;
      per[i].impossible.push_back({rec.market_id, snap.time, *floor, impossible_mass(snap, *floor)});
    }
  });

  DiagnoseResult result;
  for (auto& p : per) {
    result.impossible.insert(result.impossible.end(), p.impossible.begin(), p.impossible.end());
    result.violations.insert(result.violations.end(), p.violations.begin(), p.violations.end());
  }
  result.volume = volume_summary(markets);

  std::string mass_csv = "market_id,time,known_floor,impossible_mass\n";
  for (const auto& p : result.impossible) {
    mass_csv += csv::join_row({p.market_id, format_rfc3339(p.time), csv::format_number(p.known_floor),
                               csv::format_number(p.mass)});
  }
  std::string by_market_csv = "market_id,resolution_time,n_snapshots,mean_impossible_mass,first_impossible_mass,last_impossible_mass\n";
  std::vector<svg::Series> lines;
  std::vector<double> market_x, market_mean;
  const Timestamp origin = result.impossible.empty() ? Timestamp{} : std::min_element(
      result.impossible.begin(), result.impossible.end(), [](const auto& a, const auto& b) { return a.time < b.time; })->time;
  for (std::size_t i = 0; i < markets.size(); ++i) {
    const auto& pts = per[i].impossible;
    if (pts.empty()) continue;
    std::vector<double> masses, x;
    for (const auto& p : pts) {
      masses.push_back(p.mass);
      x.push_back(static_cast<double>(to_unix(p.time) - to_unix(origin)) / 86400.0);
    }
    const double mean = compensated_sum(masses) / static_cast<double>(masses.size());
    by_market_csv += csv::join_row({markets[i].market_id, format_rfc3339(markets[i].resolution_time),
                                    std::to_string(pts.size()), csv::format_number(mean),
                                    csv::format_number(masses.front()), csv::format_number(masses.back())});
    lines.push_back(svg::Series{"", x, masses, "#1f77b4"});
    market_x.push_back(static_cast<double>(market_x.size() + 1));
    market_mean.push_back(mean);
  }

  std::string violation_csv = "market_id,time,raw_sum,monotonicity_violation\n";
  for (const auto& v : result.violations) {
    violation_csv += csv::join_row({v.market_id, format_rfc3339(v.time), csv::format_number(v.raw_sum),
                                    csv::format_number(v.violation)});
  }
  std::string vol_markets = "market_id,total_usd,status\n";
  for (const auto& m : result.volume.markets) {
    vol_markets += csv::join_row({m.market_id, m.total_usd ? csv::format_number(*m.total_usd) : "",
                                  m.total_usd ? "ok" : "missing"});
  }
  std::string vol_weekly = "iso_week,usd\n";
  for (const auto& [week, usd] : result.volume.weekly_usd) {
    vol_weekly += csv::join_row({format_iso_week(week), csv::format_number(usd)});
  }

  const std::vector<svg::LinePanel> panels = {
      svg::LinePanel{"impossible mass per snapshot", "days since first snapshot", "probability", lines, {}},
      svg::LinePanel{"mean impossible mass per market", "market (resolution order)", "probability",
                     {svg::Series{"", market_x, market_mean, "#d62728"}}, {}}};

  StagedOutput out(cfg.output_dir, "diagnose");
  out.write("impossible_mass.csv", mass_csv);
  out.write("impossible_mass_by_market.csv", by_market_csv);
  out.write("monotonicity.csv", violation_csv);
  out.write("volume_markets.csv", vol_markets);
  out.write("volume_weekly.csv", vol_weekly);
  out.write("impossible_mass.svg", svg::render_lines(panels));
  out.commit();
  return result;
}

std::size_t cmd_fetch(const RunConfig& cfg, const PriceHistoryClient& client) {
  if (!cfg.manifests) config_error("fetch needs 'markets' (market manifests)");
  if (!fs::exists(*cfg.manifests)) config_error("market manifests not found: " + cfg.manifests->string());
  const auto manifests = load_manifests(*cfg.manifests);
  const MarketCache cache(cfg.cache_dir);
  FetchOptions options;
  options.fidelity_minutes = cfg.fidelity_minutes;
  options.max_in_flight = 4;
  std::size_t fetched = 0;
  for (const auto& m : manifests) {
    const bool cached = fs::exists(cache.path_for(m.market_id));
    load_or_fetch(m, cache, cfg.offline, &client, options);
    if (!cached) ++fetched;
  }
  return fetched;
}

}  // namespace pmeval
