#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmeval/time.hpp"

namespace pmeval {

enum class Disease { Influenza, Measles };
enum class MarketStructure { RangeBins, Thresholds };

std::string_view to_string(Disease d);
std::string_view to_string(MarketStructure s);
Disease parse_disease(std::string_view text);
MarketStructure parse_structure(std::string_view text);

struct PricePoint {
  Timestamp time;
  double price;

  bool operator==(const PricePoint&) const = default;
};

struct ContractPriceSeries {
  std::string contract_id;
  std::string label;
  std::vector<PricePoint> points;

  /// Strictly increasing timestamps, prices in [0,1]. Throws SchemaError.
  void validate() const;

  bool operator==(const ContractPriceSeries&) const = default;
};

/// Cumulative traded notional (USD) at a point in time.
struct VolumePoint {
  Timestamp time;
  double usd;

  bool operator==(const VolumePoint&) const = default;
};

struct MarketRecord {
  std::string market_id;
  Disease disease = Disease::Influenza;
  MarketStructure structure = MarketStructure::RangeBins;
  Timestamp resolution_time{};
  std::vector<ContractPriceSeries> contracts;
  /// Absent in older archives.
  std::optional<std::vector<VolumePoint>> volume;

  /// At least one contract, every series valid and no later than resolution_time.
  void validate() const;

  bool operator==(const MarketRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Fixture / cache schema. One JSON object per market:
//   {market_id, disease, structure, resolution_time (RFC 3339),
//    contracts: [{contract_id, label, points: [[t, p], ...]}],
//    volume: [[t, usd], ...]}            (volume optional)

std::string encode_market(const MarketRecord& record);

/// Throws SchemaError with the source name, line (for syntax errors) or field path.
MarketRecord decode_market(std::string_view json, const std::string& source_name);

/// Accepts a file holding one market object or an array of them, or a directory of
/// such files (read in lexicographic order). Every record is validated.
std::vector<MarketRecord> load_fixture(const std::filesystem::path& path);

/// Market definition used to drive fetching: the fixture schema with `points`
/// omitted and an optional `open_time` bounding the price-history window.
struct MarketManifest {
  std::string market_id;
  Disease disease = Disease::Influenza;
  MarketStructure structure = MarketStructure::RangeBins;
  Timestamp open_time{};
  Timestamp resolution_time{};
  std::vector<std::pair<std::string, std::string>> contracts;  // (contract_id, label)
  std::optional<std::vector<VolumePoint>> volume;
};

std::vector<MarketManifest> load_manifests(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// `target` is path plus query string. Must be safe to call concurrently.
  virtual HttpResponse get(const std::string& target, const HttpHeaders& headers) = 0;
};

/// cpp-httplib backed transport; accepts http:// and https:// base URLs.
std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url);

struct ApiConfig {
  std::string base_url;
  std::string prices_path = "/prices-history";
  std::string auth_header;  // header name; empty = no auth
  std::string auth_token;

  /// PMEVAL_API_BASE_URL, PMEVAL_API_PRICES_PATH, PMEVAL_API_AUTH_HEADER, PMEVAL_API_TOKEN.
  static ApiConfig from_env();
};

struct RetryPolicy {
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  int max_attempts = 5;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class PriceHistoryClient {
 public:
  PriceHistoryClient(std::shared_ptr<HttpTransport> transport, ApiConfig config, RetryPolicy retry = {},
                     Sleeper sleeper = {});

  /// GET prices-history for one contract token. Points outside [start, end] are dropped,
  /// one point is kept per fidelity interval (the last), out-of-range prices are clamped
  /// and logged. Throws HttpError, DecodeError, or Error(RateLimited) once retries run out.
  ContractPriceSeries fetch_price_history(const std::string& contract_id, int fidelity_minutes, Timestamp start,
                                          Timestamp end, std::string label = {}) const;

 private:
  std::shared_ptr<HttpTransport> transport_;
  ApiConfig config_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

/// Decodes a prices-history payload ({"history": [{"t": ..., "p": ...}]}) into sorted,
/// clamped points. Exposed for golden-file tests.
std::vector<PricePoint> decode_price_history(std::string_view body, const std::string& contract_id);

// ---------------------------------------------------------------------------
// Cache

class MarketCache {
 public:
  explicit MarketCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(std::string_view market_id) const;
  std::optional<MarketRecord> load(std::string_view market_id) const;
  /// Writes a temp file then renames it over the final path; readers never see a partial file.
  void store(const MarketRecord& record) const;

 private:
  std::filesystem::path dir_;
};

struct FetchOptions {
  int fidelity_minutes = 60;
  int max_in_flight = 4;
};

/// Cache hit: returns the cached record with no network traffic. Miss: fetches every
/// contract (bounded concurrency), publishes the record to the cache, returns it.
/// Throws CacheMiss when offline and nothing is cached.
MarketRecord load_or_fetch(const MarketManifest& manifest, const MarketCache& cache, bool offline,
                           const PriceHistoryClient* client, const FetchOptions& options = {});

}  // namespace pmeval
