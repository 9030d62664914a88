#include "pmeval/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include "pmeval/error.hpp"

namespace pmeval {
namespace {

using json = nlohmann::json;

[[noreturn]] void schema_error(const std::string& source, const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, source + ": " + (path.empty() ? "/" : path) + ": " + what);
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::SchemaError, source + ":" + std::to_string(line) + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Field accessors carrying a JSON-pointer path for diagnostics.
class Reader {
 public:
  Reader(const std::string& source) : source_(source) {}

  const json& field(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) schema_error(source_, path, "expected object");
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(source_, path + "/" + key, "missing field");
    return *it;
  }

  std::string string(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_string()) schema_error(source_, path + "/" + key, "expected string");
    return v.get<std::string>();
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) schema_error(source_, path, "expected number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_error(source_, path, "non-finite number");
    return x;
  }

  std::int64_t integer(const json& v, const std::string& path) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::isfinite(x) && x == std::floor(x)) return static_cast<std::int64_t>(x);
    }
    schema_error(source_, path, "expected integer seconds");
  }

  Timestamp time(const json& obj, const std::string& path, const char* key) const {
    const std::string text = string(obj, path, key);
    try {
      return parse_rfc3339(text);
    } catch (const Error&) {
      schema_error(source_, path + "/" + key, "not an RFC 3339 timestamp: '" + text + "'");
    }
  }

  template <typename Enum>
  Enum enumeration(const json& obj, const std::string& path, const char* key, Enum (*parse)(std::string_view)) const {
    const std::string text = string(obj, path, key);
    try {
      return parse(text);
    } catch (const Error&) {
      schema_error(source_, path + "/" + key, "unknown value '" + text + "'");
    }
  }

  std::vector<VolumePoint> volume(const json& v, const std::string& path) const {
    if (!v.is_array()) schema_error(source_, path, "expected array");
    std::vector<VolumePoint> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "/" + std::to_string(i);
      if (!v[i].is_array() || v[i].size() != 2) schema_error(source_, p, "expected [t, usd]");
      const double usd = number(v[i][1], p + "/1");
      if (usd < 0) schema_error(source_, p + "/1", "negative volume");
      if (!out.empty() && from_unix(integer(v[i][0], p + "/0")) <= out.back().time) {
        schema_error(source_, p + "/0", "volume timestamps must be strictly increasing");
      }
      out.push_back({from_unix(integer(v[i][0], p + "/0")), usd});
    }
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  const std::string& source_;
};

MarketRecord market_from_json(const json& doc, const std::string& source, const std::string& base) {
  const Reader r(source);
  MarketRecord rec;
  rec.market_id = r.string(doc, base, "market_id");
  if (rec.market_id.empty()) schema_error(source, base + "/market_id", "empty market id");
  rec.disease = r.enumeration(doc, base, "disease", &parse_disease);
  rec.structure = r.enumeration(doc, base, "structure", &parse_structure);
  rec.resolution_time = r.time(doc, base, "resolution_time");

  const json& contracts = r.field(doc, base, "contracts");
  if (!contracts.is_array() || contracts.empty()) {
    schema_error(source, base + "/contracts", "expected a non-empty array");
  }
  for (std::size_t c = 0; c < contracts.size(); ++c) {
    const std::string cpath = base + "/contracts/" + std::to_string(c);
    ContractPriceSeries series;
    series.contract_id = r.string(contracts[c], cpath, "contract_id");
    series.label = r.string(contracts[c], cpath, "label");
    const json& points = r.field(contracts[c], cpath, "points");
    if (!points.is_array()) schema_error(source, cpath + "/points", "expected array");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string ppath = cpath + "/points/" + std::to_string(i);
      if (!points[i].is_array() || points[i].size() != 2) schema_error(source, ppath, "expected [t, p]");
      const Timestamp t = from_unix(r.integer(points[i][0], ppath + "/0"));
      const double p = r.number(points[i][1], ppath + "/1");
      if (p < 0.0 || p > 1.0) schema_error(source, ppath + "/1", "price " + std::to_string(p) + " outside [0,1]");
      if (!series.points.empty() && t <= series.points.back().time) {
        schema_error(source, ppath + "/0", "timestamps must be strictly increasing");
      }
      if (t > rec.resolution_time) schema_error(source, ppath + "/0", "price point after resolution_time");
      series.points.push_back({t, p});
    }
    rec.contracts.push_back(std::move(series));
  }
  if (const auto it = doc.find("volume"); it != doc.end() && !it->is_null()) {
    rec.volume = r.volume(*it, base + "/volume");
  }
  return rec;
}

json market_to_json(const MarketRecord& rec) {
  json doc = json::object();
  doc["market_id"] = rec.market_id;
  doc["disease"] = std::string(to_string(rec.disease));
  doc["structure"] = std::string(to_string(rec.structure));
  doc["resolution_time"] = format_rfc3339(rec.resolution_time);
  json contracts = json::array();
  for (const auto& c : rec.contracts) {
    json points = json::array();
    for (const auto& p : c.points) points.push_back(json::array({to_unix(p.time), p.price}));
    contracts.push_back({{"contract_id", c.contract_id}, {"label", c.label}, {"points", std::move(points)}});
  }
  doc["contracts"] = std::move(contracts);
  if (rec.volume) {
    json vol = json::array();
    for (const auto& v : *rec.volume) vol.push_back(json::array({to_unix(v.time), v.usd}));
    doc["volume"] = std::move(vol);
  }
  return doc;
}

std::vector<std::filesystem::path> json_files_in(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

template <typename T, typename Fn>
std::vector<T> load_documents(const std::filesystem::path& path, Fn&& from_doc) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    files = json_files_in(path);
    if (files.empty()) throw Error(ErrorCode::SchemaError, path.string() + ": directory holds no .json files");
  } else if (std::filesystem::exists(path)) {
    files.push_back(path);
  } else {
    throw Error(ErrorCode::IoError, "no such file or directory: " + path.string());
  }
  std::vector<T> out;
  for (const auto& file : files) {
    const std::string text = read_file(file);
    const std::string source = file.string();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw Error(ErrorCode::SchemaError, source + ":1: empty document");
    }
    const json doc = parse_json(text, source);
    if (doc.is_array()) {
      if (doc.empty()) throw Error(ErrorCode::SchemaError, source + ": empty market array");
      for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(from_doc(doc[i], source, "/" + std::to_string(i)));
    } else {
      out.push_back(from_doc(doc, source, ""));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Disease d) { return d == Disease::Influenza ? "influenza" : "measles"; }

std::string_view to_string(MarketStructure s) {
  return s == MarketStructure::RangeBins ? "range_bins" : "thresholds";
}

Disease parse_disease(std::string_view text) {
  if (text == "influenza" || text == "flu") return Disease::Influenza;
  if (text == "measles") return Disease::Measles;
  throw Error(ErrorCode::SchemaError, "unknown disease '" + std::string(text) + "'");
}

MarketStructure parse_structure(std::string_view text) {
  if (text == "range_bins") return MarketStructure::RangeBins;
  if (text == "thresholds") return MarketStructure::Thresholds;
  throw Error(ErrorCode::SchemaError, "unknown market structure '" + std::string(text) + "'");
}

void ContractPriceSeries::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].price >= 0.0 && points[i].price <= 1.0)) {
      throw Error(ErrorCode::SchemaError, "contract " + contract_id + ": price outside [0,1] at " +
                                              format_rfc3339(points[i].time));
    }
    if (i > 0 && points[i].time <= points[i - 1].time) {
      throw Error(ErrorCode::SchemaError, "contract " + contract_id + ": timestamps not strictly increasing at " +
                                              format_rfc3339(points[i].time));
    }
  }
}

void MarketRecord::validate() const {
  if (contracts.empty()) throw Error(ErrorCode::SchemaError, "market " + market_id + " has no contracts");
  for (const auto& c : contracts) {
    c.validate();
    if (!c.points.empty() && c.points.back().time > resolution_time) {
      throw Error(ErrorCode::SchemaError, "market " + market_id + ": contract " + c.contract_id +
                                              " has prices after resolution_time");
    }
  }
}

std::string encode_market(const MarketRecord& record) { return market_to_json(record).dump(1) + "\n"; }

MarketRecord decode_market(std::string_view text, const std::string& source_name) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::SchemaError, source_name + ":1: empty document");
  }
  const json doc = parse_json(text, source_name);
  MarketRecord rec = market_from_json(doc, source_name, "");
  rec.validate();
  return rec;
}

std::vector<MarketRecord> load_fixture(const std::filesystem::path& path) {
  auto records = load_documents<MarketRecord>(path, [](const json& doc, const std::string& src, const std::string& base) {
    MarketRecord rec = market_from_json(doc, src, base);
    rec.validate();
    return rec;
  });
  return records;
}

std::vector<MarketManifest> load_manifests(const std::filesystem::path& path) {
  return load_documents<MarketManifest>(path, [](const json& doc, const std::string& src, const std::string& base) {
    const Reader r(src);
    MarketManifest m;
    m.market_id = r.string(doc, base, "market_id");
    m.disease = r.enumeration(doc, base, "disease", &parse_disease);
    m.structure = r.enumeration(doc, base, "structure", &parse_structure);
    m.resolution_time = r.time(doc, base, "resolution_time");
    m.open_time = doc.contains("open_time") ? r.time(doc, base, "open_time")
                                            : m.resolution_time - std::chrono::days{90};
    if (m.open_time >= m.resolution_time) schema_error(src, base + "/open_time", "must precede resolution_time");
    const json& contracts = r.field(doc, base, "contracts");
    if (!contracts.is_array() || contracts.empty()) schema_error(src, base + "/contracts", "expected a non-empty array");
    for (std::size_t c = 0; c < contracts.size(); ++c) {
      const std::string cpath = base + "/contracts/" + std::to_string(c);
      m.contracts.emplace_back(r.string(contracts[c], cpath, "contract_id"), r.string(contracts[c], cpath, "label"));
    }
    if (const auto it = doc.find("volume"); it != doc.end() && !it->is_null()) m.volume = r.volume(*it, base + "/volume");
    return m;
  });
}

// ---------------------------------------------------------------------------

ApiConfig ApiConfig::from_env() {
  ApiConfig cfg;
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  cfg.base_url = env("PMEVAL_API_BASE_URL");
  if (auto path = env("PMEVAL_API_PRICES_PATH"); !path.empty()) cfg.prices_path = path;
  cfg.auth_header = env("PMEVAL_API_AUTH_HEADER");
  cfg.auth_token = env("PMEVAL_API_TOKEN");
  return cfg;
}

PriceHistoryClient::PriceHistoryClient(std::shared_ptr<HttpTransport> transport, ApiConfig config, RetryPolicy retry,
                                       Sleeper sleeper)
    : transport_(std::move(transport)), config_(std::move(config)), retry_(retry), sleeper_(std::move(sleeper)) {
  if (!transport_) throw Error(ErrorCode::ConfigError, "price history client needs a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::vector<PricePoint> decode_price_history(std::string_view body, const std::string& contract_id) {
  json doc;
  try {
    doc = json::parse(body.begin(), body.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("history") || !doc["history"].is_array()) {
    throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": missing 'history' array");
  }
  std::vector<PricePoint> points;
  for (const auto& item : doc["history"]) {
    if (!item.is_object() || !item.contains("t") || !item.contains("p")) {
      throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": entry without t/p");
    }
    const json& t = item["t"];
    const json& p = item["p"];
    if (!t.is_number()) throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": bad 't'");
    double price = 0.0;
    if (p.is_number()) {
      price = p.get<double>();
    } else if (p.is_string()) {
      const std::string s = p.get<std::string>();
      char* end = nullptr;
      price = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size()) {
        throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": bad price '" + s + "'");
      }
    } else {
      throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": bad 'p'");
    }
    if (!std::isfinite(price)) {
      throw Error(ErrorCode::DecodeError, "prices-history for " + contract_id + ": non-finite price");
    }
    const Timestamp when = from_unix(t.is_number_integer() ? t.get<std::int64_t>()
                                                           : static_cast<std::int64_t>(std::floor(t.get<double>())));
    if (price < 0.0 || price > 1.0) {
      spdlog::warn("contract {}: clamping price {} at {}", contract_id, price, format_rfc3339(when));
      price = std::clamp(price, 0.0, 1.0);
    }
    points.push_back({when, price});
  }
  // Sort, then keep the last tick for any repeated timestamp.
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  std::vector<PricePoint> unique;
  for (const auto& p : points) {
    if (!unique.empty() && unique.back().time == p.time) {
      unique.back() = p;
    } else {
      unique.push_back(p);
    }
  }
  return unique;
}

namespace {

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

}  // namespace

ContractPriceSeries PriceHistoryClient::fetch_price_history(const std::string& contract_id, int fidelity_minutes,
                                                            Timestamp start, Timestamp end, std::string label) const {
  if (fidelity_minutes < 1) throw Error(ErrorCode::ConfigError, "fidelity must be at least one minute");
  if (!(start < end)) throw Error(ErrorCode::ConfigError, "fetch window start must precede end");

  const std::string target = config_.prices_path + "?market=" + url_encode(contract_id) +
                             "&fidelity=" + std::to_string(fidelity_minutes) +
                             "&startTs=" + std::to_string(to_unix(start)) + "&endTs=" + std::to_string(to_unix(end));
  HttpHeaders headers;
  if (!config_.auth_header.empty()) headers.emplace_back(config_.auth_header, config_.auth_token);

  std::chrono::milliseconds delay = retry_.base_delay;
  HttpResponse response;
  for (int attempt = 1;; ++attempt) {
    response = transport_->get(target, headers);
    if (response.status != 429) break;
    if (attempt >= retry_.max_attempts) {
      throw Error(ErrorCode::RateLimited, "contract " + contract_id + ": still rate limited after " +
                                              std::to_string(attempt) + " attempts");
    }
    spdlog::info("contract {}: rate limited, retrying in {} ms", contract_id, delay.count());
    sleeper_(delay);
    delay = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(delay.count()) * retry_.factor));
  }
  if (response.status < 200 || response.status >= 300) {
    throw HttpError(response.status, response.body.substr(0, 200));
  }

  const std::vector<PricePoint> raw = decode_price_history(response.body, contract_id);
  const std::int64_t step = std::int64_t{fidelity_minutes} * 60;
  const std::int64_t span = to_unix(end) - to_unix(start);
  const std::int64_t n_buckets = std::max<std::int64_t>(1, (span + step - 1) / step);

  ContractPriceSeries series{contract_id, std::move(label), {}};
  std::int64_t last_bucket = -1;
  for (const auto& p : raw) {
    if (p.time < start || p.time > end) continue;
    const std::int64_t bucket = std::min((to_unix(p.time) - to_unix(start)) / step, n_buckets - 1);
    if (bucket == last_bucket) {
      series.points.back() = p;
    } else {
      series.points.push_back(p);
      last_bucket = bucket;
    }
  }
  series.validate();
  return series;
}

// ---------------------------------------------------------------------------

std::filesystem::path MarketCache::path_for(std::string_view market_id) const {
  std::string name;
  for (char c : market_id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    name.push_back(safe ? c : '_');
  }
  return dir_ / (name + ".json");
}

std::optional<MarketRecord> MarketCache::load(std::string_view market_id) const {
  const auto path = path_for(market_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  MarketRecord rec = decode_market(read_file(path), path.string());
  if (rec.market_id != market_id) {
    throw Error(ErrorCode::SchemaError, path.string() + ": cached market id '" + rec.market_id +
                                            "' does not match '" + std::string(market_id) + "'");
  }
  return rec;
}

void MarketCache::store(const MarketRecord& record) const {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create cache dir " + dir_.string() + ": " + ec.message());
  const auto final_path = path_for(record.market_id);
  std::ostringstream tmp_name;
  tmp_name << final_path.filename().string() << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const auto tmp_path = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp_path.string());
    out << encode_market(record);
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp_path.string());
  }
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) {
    std::filesystem::remove(tmp_path);
    throw Error(ErrorCode::IoError, "cannot publish " + final_path.string() + ": " + ec.message());
  }
}

MarketRecord load_or_fetch(const MarketManifest& manifest, const MarketCache& cache, bool offline,
                           const PriceHistoryClient* client, const FetchOptions& options) {
  if (auto cached = cache.load(manifest.market_id)) return std::move(*cached);
  if (offline) throw Error(ErrorCode::CacheMiss, "market " + manifest.market_id + " not cached (offline mode)");
  if (client == nullptr) throw Error(ErrorCode::ConfigError, "no API client configured for fetching");

  MarketRecord rec;
  rec.market_id = manifest.market_id;
  rec.disease = manifest.disease;
  rec.structure = manifest.structure;
  rec.resolution_time = manifest.resolution_time;
  rec.volume = manifest.volume;
  rec.contracts.resize(manifest.contracts.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.contracts.size(); i = next++) {
      {
        std::lock_guard lock(error_mutex);
        if (first_error) return;
      }
      try {
        const auto& [id, label] = manifest.contracts[i];
        rec.contracts[i] = client->fetch_price_history(id, options.fidelity_minutes, manifest.open_time,
                                                       manifest.resolution_time, label);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.max_in_flight)), manifest.contracts.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  rec.validate();
  cache.store(rec);
  return rec;
}

}  // namespace pmeval
