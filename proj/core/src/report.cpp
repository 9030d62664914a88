#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pmeval/csv.hpp"
#include "pmeval/error.hpp"
#include "pmeval/pipeline.hpp"
#include "pmeval/svg.hpp"

namespace pmeval {
namespace {

namespace fs = std::filesystem;

std::optional<std::string> slurp(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<csv::Table> read_table(const fs::path& path, const std::vector<std::string>& required) {
  if (!fs::exists(path)) return std::nullopt;
  csv::Table t = csv::Table::read(path);
  for (const auto& col : required) t.require_column(col);
  return t;
}

std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct AggregateRow {
  std::string model_id;
  double brier, log_score, crps;
};

std::vector<AggregateRow> aggregate_rows(const csv::Table& t) {
  const auto ev = t.require_column("event_id"), model = t.require_column("model_id");
  const auto b = t.require_column("brier"), l = t.require_column("log_score"), c = t.require_column("crps");
  std::vector<AggregateRow> out;
  for (const auto& row : t.rows()) {
    if (row.fields.size() != t.header().size()) {
      throw Error(ErrorCode::SchemaError, t.source() + ":" + std::to_string(row.line) + ": wrong field count");
    }
    const double brier = csv::parse_number(row.fields[b], t.source(), row.line, "brier");
    const double log_score = csv::parse_number(row.fields[l], t.source(), row.line, "log_score");
    const double crps = csv::parse_number(row.fields[c], t.source(), row.line, "crps");
    if (row.fields[ev] == "ALL") out.push_back({row.fields[model], brier, log_score, crps});
  }
  return out;
}

void check_numeric(const csv::Table& t, const std::vector<std::string>& columns) {
  for (const auto& row : t.rows()) {
    if (row.fields.size() != t.header().size()) {
      throw Error(ErrorCode::SchemaError, t.source() + ":" + std::to_string(row.line) + ": wrong field count");
    }
    for (const auto& col : columns) {
      const auto& f = row.fields[t.require_column(col)];
      if (!f.empty()) csv::parse_number(f, t.source(), row.line, col);
    }
  }
}

std::string markdown_table(const csv::Table& t) {
  std::string out = "|";
  for (const auto& h : t.header()) out += " " + h + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.header().size(); ++i) out += "---|";
  out += "\n";
  for (const auto& row : t.rows()) {
    out += "|";
    for (const auto& f : row.fields) out += " " + f + " |";
    out += "\n";
  }
  return out;
}

}  // namespace

fs::path cmd_report(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  const auto scores = read_table(dir / "scores.csv", {"event_id", "model_id", "brier", "log_score", "crps"});
  const auto ranks = read_table(dir / "ranks.csv", {"metric", "model_id", "mean_score", "percentile_strict",
                                                    "percentile_weak", "hub_models"});
  const auto star = read_table(dir / "alpha_star.csv", {"metric", "alpha_star", "best_score"});
  const auto curve_svg = slurp(dir / "alpha_curve.svg");
  const auto by_market = read_table(dir / "impossible_mass_by_market.csv",
                                    {"market_id", "mean_impossible_mass", "first_impossible_mass", "last_impossible_mass"});
  const auto mass_svg = slurp(dir / "impossible_mass.svg");
  const auto weekly = read_table(dir / "volume_weekly.csv", {"iso_week", "usd"});
  const auto vol_markets = read_table(dir / "volume_markets.csv", {"market_id", "total_usd", "status"});
  const auto metadata = slurp(dir / "metadata.json");

  if (!scores && !star && !by_market && !weekly) {
    throw Error(ErrorCode::MissingArtifacts, "no evaluate, combine or diagnose output in " + dir.string() +
                                                 "; run one of those first");
  }

  std::ostringstream md;
  md << "# Forecast evaluation report\n\n";
  md << "Disease: " << to_string(cfg.disease) << "  \nTarget: `" << cfg.target_key << "`\n\n";

  md << "## Scores\n\n";
  if (!scores) {
    md << "_Not run: `pmeval evaluate` output not found._\n\n";
  } else {
    const auto agg = aggregate_rows(*scores);
    md << "Mean score per model over all events (lower is better).\n\n";
    md << "| model | Brier | log | CRPS |\n|---|---|---|---|\n";
    for (const auto& r : agg) {
      md << "| " << r.model_id << " | " << fixed(r.brier) << " | " << fixed(r.log_score) << " | " << fixed(r.crps)
         << " |\n";
    }
    md << "\n";
    if (ranks && !ranks->rows().empty()) {
      check_numeric(*ranks, {"mean_score", "percentile_strict", "percentile_weak"});
      md << "Percentile rank among individual hub models (strict: share with a higher mean; weak: higher or equal).\n\n";
      md << markdown_table(*ranks) << "\n";
    }
    std::vector<double> hub_b, hub_l, hub_c;
    std::map<std::string, const AggregateRow*> special;
    for (const auto& r : agg) {
      if (r.model_id == kMarketModelId || r.model_id == kArimaModelId || r.model_id == cfg.ensemble_model) {
        special[r.model_id] = &r;
      } else {
        hub_b.push_back(r.brier);
        hub_l.push_back(r.log_score);
        hub_c.push_back(r.crps);
      }
    }
    if (!hub_b.empty()) {
      auto markers = [&](double AggregateRow::*field) {
        std::vector<svg::Marker> m;
        const char* colors[] = {"#d62728", "#2ca02c", "#9467bd"};
        int k = 0;
        for (const auto& [id, row] : special) m.push_back(svg::Marker{id, row->*field, colors[k++ % 3]});
        return m;
      };
      const std::vector<svg::HistogramPanel> panels = {
          {"Brier", "mean score", hub_b, markers(&AggregateRow::brier), 10},
          {"log", "mean score", hub_l, markers(&AggregateRow::log_score), 10},
          {"CRPS", "mean score", hub_c, markers(&AggregateRow::crps), 10}};
      md << "Distribution of hub model mean scores with reference models marked.\n\n";
      md << svg::render_histograms(panels) << "\n\n";
    }
  }

  md << "## Ensemble / market combination\n\n";
  if (!star) {
    md << "_Not run: `pmeval combine` output not found._\n\n";
  } else {
    check_numeric(*star, {"alpha_star", "best_score"});
    md << "alpha is the ensemble weight; alpha = 1 is the ensemble alone, 0 the market alone.\n\n";
    md << markdown_table(*star) << "\n";
    if (curve_svg) md << *curve_svg << "\n\n";
  }

  md << "## Market diagnostics\n\n";
  if (!by_market && !weekly) {
    md << "_Not run: `pmeval diagnose` output not found._\n\n";
  } else {
    if (by_market) {
      check_numeric(*by_market, {"mean_impossible_mass", "first_impossible_mass", "last_impossible_mass"});
      md << "### Impossible mass\n\nProbability on bins already excluded by published surveillance data.\n\n";
      md << markdown_table(*by_market) << "\n";
      if (mass_svg) md << *mass_svg << "\n\n";
    }
    if (weekly) {
      check_numeric(*weekly, {"usd"});
      md << "### Trading volume\n\n";
      if (vol_markets) {
        std::size_t missing = 0;
        for (const auto& row : vol_markets->rows()) {
          if (row.fields.size() == vol_markets->header().size() &&
              row.fields[vol_markets->require_column("status")] == "missing") {
            ++missing;
          }
        }
        md << "Markets with volume data: " << vol_markets->rows().size() - missing << "; missing: " << missing
           << ".\n\n";
      }
      md << markdown_table(*weekly) << "\n";
    }
  }

  md << "## Run metadata\n\n";
  if (metadata) {
    md << "```json\n" << *metadata << "```\n";
  } else {
    md << "```json\n" << run_metadata(cfg) << "```\n";
  }

  StagedOutput out(dir, "report");
  out.write("report.md", md.str());
  out.commit();
  return dir / "report.md";
}

}  // namespace pmeval
