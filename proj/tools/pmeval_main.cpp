// pmeval: evaluate prediction-market disease forecasts against hub models and ARIMA.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pmeval/error.hpp"
#include "pmeval/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  bool offline = false;
  std::string output;
  std::string cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> fidelity;
  std::string log_level = "info";
};

pmeval::RunConfig load(const Overrides& o) {
  if (o.config.empty()) throw pmeval::Error(pmeval::ErrorCode::ConfigError, "--config is required");
  pmeval::RunConfig cfg = pmeval::RunConfig::load(o.config);
  if (o.offline) cfg.offline = true;
  if (!o.output.empty()) cfg.output_dir = o.output;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.fidelity) cfg.fidelity_minutes = *o.fidelity;
  return cfg;
}

int run(const std::string& verb, const Overrides& o) {
  const pmeval::RunConfig cfg = load(o);
  if (verb == "evaluate") {
    const auto res = pmeval::cmd_evaluate(cfg);
    for (const auto& agg : res.aggregate) {
      std::printf("%-24s brier=%.4f log=%.4f crps=%.4f\n", agg.model_id.c_str(), agg.brier, agg.log_score, agg.crps);
    }
  } else if (verb == "combine") {
    for (const auto& c : pmeval::cmd_combine(cfg)) {
      std::printf("%-6s alpha*=%.2f score=%.6f\n", std::string(pmeval::to_string(c.metric)).c_str(), c.alpha_star,
                  c.best_score);
    }
  } else if (verb == "diagnose") {
    const auto res = pmeval::cmd_diagnose(cfg);
    std::printf("impossible-mass points: %zu, threshold snapshots: %zu, volume: $%.0f (%zu markets missing)\n",
                res.impossible.size(), res.violations.size(), res.volume.aggregate_usd, res.volume.markets_missing);
  } else if (verb == "report") {
    std::printf("%s\n", pmeval::cmd_report(cfg).string().c_str());
  } else if (verb == "fetch") {
    const pmeval::ApiConfig api = pmeval::ApiConfig::from_env();
    if (api.base_url.empty() && !cfg.offline) {
      throw pmeval::Error(pmeval::ErrorCode::ConfigError, "PMEVAL_API_BASE_URL is not set");
    }
    const pmeval::PriceHistoryClient client(api.base_url.empty() ? nullptr : pmeval::make_http_transport(api.base_url),
                                            api);
    std::printf("fetched %zu markets into %s\n", pmeval::cmd_fetch(cfg, client), cfg.cache_dir.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate prediction-market disease forecasts"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("-c,--config", o.config, "run configuration (JSON)");
  app.add_flag("--offline", o.offline, "never touch the network; read fixtures or the cache");
  app.add_option("-o,--output", o.output, "output directory");
  app.add_option("--cache-dir", o.cache_dir, "market cache directory");
  app.add_option("--seed", o.seed, "seed recorded in run metadata");
  app.add_option("--workers", o.workers, "parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--fidelity-min", o.fidelity, "price-history fidelity in minutes")->check(CLI::PositiveNumber);
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error, off");

  for (const char* verb : {"evaluate", "combine", "diagnose", "report", "fetch"}) app.add_subcommand(verb);
  app.get_subcommand("evaluate")->description("score markets, hub models and ARIMA");
  app.get_subcommand("combine")->description("search the ensemble/market mixing weight");
  app.get_subcommand("diagnose")->description("impossible mass, monotonicity and volume");
  app.get_subcommand("report")->description("assemble report.md from prior outputs");
  app.get_subcommand("fetch")->description("download price histories into the cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pmeval::ExitStatus::Config);
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("pmeval"));
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const pmeval::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(pmeval::exit_status_for(e.code()));
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(pmeval::ExitStatus::Data);
  }
}
