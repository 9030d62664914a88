#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmeval/arima.hpp"
#include "pmeval/bins.hpp"
#include "pmeval/combination.hpp"
#include "pmeval/contracts.hpp"
#include "pmeval/diagnostics.hpp"
#include "pmeval/ingest.hpp"
#include "pmeval/scoring.hpp"

namespace pmeval {

inline constexpr const char* kMarketModelId = "polymarket";
inline constexpr const char* kArimaModelId = "auto-ARIMA";

struct RunConfig {
  Disease disease = Disease::Influenza;
  std::optional<std::filesystem::path> fixture;    // fixture file/dir of MarketRecords
  std::optional<std::filesystem::path> manifests;  // market definitions for cache/fetch mode
  std::filesystem::path surveillance_dir;
  std::string target_key;                          // surveillance series settling the markets
  std::optional<std::filesystem::path> hub_forecasts;
  std::string hub_target = "wk inc flu hosp";
  std::string hub_location;                        // filter on the optional location column
  int hub_horizon = 1;
  std::string ensemble_model = "FluSight-ensemble";
  std::filesystem::path cache_dir = ".pmeval-cache";
  bool offline = false;
  int fidelity_minutes = 60;
  double kappa = 1.0;
  double grid_step = 0.01;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 20260101;
  int workers = 4;
  bool arima_enabled = false;
  AutoArimaOptions arima;
  PercentileConvention percentile = PercentileConvention::Strict;

  /// JSON file mirroring the fields above; relative paths resolve against the file's
  /// directory. Throws ConfigError.
  static RunConfig load(const std::filesystem::path& path);

  /// Throws ConfigError when inputs are missing or settings are out of range.
  void validate() const;
};

/// Everything needed to score one market.
struct PreparedEvent {
  std::string event_id;
  MarketRecord record;
  BinPartition partition;
  SnapshotSeries snapshots;
  Outcome outcome;
  std::map<std::string, PredictiveDistribution> hub;  // model_id -> binned forecast
  std::optional<PredictiveDistribution> arima;
  std::optional<ArimaModel> arima_model;
};

std::vector<MarketRecord> load_markets(const RunConfig& config);

/// Runs ingest -> reconstruct -> resolve -> baselines for every market; markets that are
/// unresolved or have no valid snapshot are skipped with a warning.
std::vector<PreparedEvent> prepare_events(const RunConfig& config);

struct RankRow {
  Metric metric;
  std::string model_id;
  double mean_score;
  double percentile_strict;
  double percentile_weak;
  std::size_t hub_models;
};

struct EvaluateResult {
  std::vector<ScoreRecord> per_event;
  std::vector<ScoreRecord> aggregate;  // event_id "ALL", one per model
  std::vector<RankRow> ranks;
};

/// Writes scores.csv, ranks.csv and metadata.json.
EvaluateResult cmd_evaluate(const RunConfig& config);

/// Writes alpha_curve.csv, alpha_star.csv and alpha_curve.svg. Throws EmptyEvents when
/// no event has both an ensemble and a market forecast.
std::vector<CombinationCurve> cmd_combine(const RunConfig& config);

struct ImpossibleMassPoint {
  std::string market_id;
  Timestamp time;
  double known_floor;
  double mass;
};

struct ViolationPoint {
  std::string market_id;
  Timestamp time;
  double raw_sum;
  double violation;
};

struct DiagnoseResult {
  std::vector<ImpossibleMassPoint> impossible;
  std::vector<ViolationPoint> violations;
  VolumeSummary volume;
};

/// Writes impossible_mass.csv, monotonicity.csv, volume_markets.csv, volume_weekly.csv
/// and impossible_mass.svg.
DiagnoseResult cmd_diagnose(const RunConfig& config);

/// Assembles report.md from prior outputs in the output directory. Throws
/// MissingArtifacts when no prior output exists and SchemaError on corrupt tables.
std::filesystem::path cmd_report(const RunConfig& config);

/// Populates the cache from the manifests. Returns the number of markets fetched.
std::size_t cmd_fetch(const RunConfig& config, const PriceHistoryClient& client);

/// Run-metadata block (JSON text) recording every scoring convention.
std::string run_metadata(const RunConfig& config);

/// Output files are written into a staging directory and renamed into place together.
class StagedOutput {
 public:
  explicit StagedOutput(std::filesystem::path output_dir, const std::string& stage_name);
  ~StagedOutput();
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  void write(const std::string& file_name, const std::string& contents);
  void commit();

 private:
  std::filesystem::path output_dir_;
  std::filesystem::path staging_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

}  // namespace pmeval
