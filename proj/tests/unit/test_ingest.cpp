#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "pmeval/error.hpp"
#include "pmeval/ingest.hpp"
#include "test_support.hpp"

using namespace pmeval;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Scripted transport: pops canned responses, records every target.
class FakeTransport : public HttpTransport {
 public:
  std::function<HttpResponse(const std::string&)> handler;
  std::atomic<int> calls{0};
  std::mutex mu;
  std::vector<std::string> targets;
  std::vector<HttpHeaders> headers;

  HttpResponse get(const std::string& target, const HttpHeaders& h) override {
    ++calls;
    {
      std::lock_guard lock(mu);
      targets.push_back(target);
      headers.push_back(h);
    }
    return handler(target);
  }
};

ApiConfig api() {
  ApiConfig c;
  c.base_url = "http://example.invalid";
  c.auth_header = "X-Api-Key";
  c.auth_token = "secret";
  return c;
}

MarketRecord sample_record() {
  MarketRecord r;
  r.market_id = "m-1";
  r.disease = Disease::Measles;
  r.structure = MarketStructure::Thresholds;
  r.resolution_time = parse_rfc3339("2026-03-31T23:00:00Z");
  r.contracts = {{"c0", "1,000+ cases by March 31, 2026", {{from_unix(100), 0.25}, {from_unix(200), 0.125}}},
                 {"c1", "At least 1,200 cases?", {{from_unix(150), 1.0}}}};
  r.volume = std::vector<VolumePoint>{{from_unix(100), 10.5}, {from_unix(300), 99.25}};
  return r;
}

ErrorCode fixture_error(const std::string& text) {
  test::TempDir dir("fixture");
  const auto path = dir.path() / "bad.json";
  std::ofstream(path) << text;
  try {
    load_fixture(path);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;
}

}  // namespace

TEST(Codec, RoundTripPreservesRecord) {
  const MarketRecord r = sample_record();
  EXPECT_EQ(decode_market(encode_market(r), "mem"), r);
  MarketRecord no_volume = r;
  no_volume.volume.reset();
  EXPECT_EQ(decode_market(encode_market(no_volume), "mem"), no_volume);
}

TEST(Codec, RandomRecordsRoundTripBitExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    MarketRecord r;
    r.market_id = "rand-" + std::to_string(trial);
    r.resolution_time = from_unix(2'000'000'000);
    for (int c = 0; c < 3; ++c) {
      ContractPriceSeries s{"c" + std::to_string(c), std::to_string(c * 10) + "+", {}};
      std::int64_t t = 1'700'000'000;
      for (int i = 0; i < 20; ++i) {
        t += 1 + static_cast<std::int64_t>(u(rng) * 5000);
        s.points.push_back({from_unix(t), u(rng)});
      }
      r.contracts.push_back(s);
    }
    EXPECT_EQ(decode_market(encode_market(r), "mem"), r);
  }
}

TEST(Fixture, ShippedFluSetHasSixteenInfluenzaMarkets) {
  const auto markets = load_fixture(test::fixture_dir("flu") / "markets.json");
  ASSERT_EQ(markets.size(), 16u);
  for (const auto& m : markets) {
    EXPECT_EQ(m.disease, Disease::Influenza);
    EXPECT_EQ(m.structure, MarketStructure::RangeBins);
  }
}

TEST(Fixture, DirectoryIsReadInNameOrder) {
  test::TempDir dir("fixture-dir");
  MarketRecord a = sample_record();
  MarketRecord b = sample_record();
  b.market_id = "m-0";
  std::ofstream(dir.path() / "b.json") << encode_market(a);
  std::ofstream(dir.path() / "a.json") << encode_market(b);
  std::ofstream(dir.path() / "notes.txt") << "ignored";
  const auto markets = load_fixture(dir.path());
  ASSERT_EQ(markets.size(), 2u);
  EXPECT_EQ(markets[0].market_id, "m-0");
}

TEST(Fixture, SchemaViolations) {
  const std::string head = R"({"market_id":"m","disease":"influenza","structure":"range_bins",)"
                           R"("resolution_time":"2026-01-02T00:00:00Z","contracts":[{"contract_id":"c","label":"5+","points":)";
  EXPECT_EQ(fixture_error(head + "[[0,1.3]]}]}"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error(""), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error("   \n"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error(head + "[[5,0.1],[5,0.2]]}]}"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error(head + "[[1999999999,0.1]]}]}"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error(R"({"market_id":"m","disease":"cholera"})"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error("{\"market_id\": \n oops}"), ErrorCode::SchemaError);
  EXPECT_EQ(fixture_error(head + "[]}], \"volume\": [[0, -1]]}"), ErrorCode::SchemaError);
}

TEST(Fixture, ErrorsCarryLineOrFieldPath) {
  test::TempDir dir("fixture-msg");
  const auto path = dir.path() / "m.json";
  std::ofstream(path) << "{\n\"market_id\": \"m\",\n oops}";
  try {
    load_fixture(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("m.json:3"), std::string::npos) << e.what();
  }
  std::ofstream(path, std::ios::trunc)
      << R"({"market_id":"m","disease":"influenza","structure":"range_bins","resolution_time":"2026-01-02T00:00:00Z",)"
         R"("contracts":[{"contract_id":"c","label":"5+","points":[[0,0.5],[1,1.3]]}]})";
  try {
    load_fixture(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/contracts/0/points/1/1"), std::string::npos) << e.what();
  }
}

TEST(PriceHistory, RecordedResponseDecodesBitIdentically) {
  auto transport = std::make_shared<FakeTransport>();
  const std::string body = read_text(test::source_dir() / "tests" / "data" / "prices_history_recorded.json");
  transport->handler = [&](const std::string&) { return HttpResponse{200, body}; };
  const PriceHistoryClient client(transport, api());
  const auto s = client.fetch_price_history("tok", 60, from_unix(1768435200), from_unix(1768446000));
  ASSERT_EQ(s.points.size(), 3u);
  EXPECT_EQ(s.points[0].price, 0.415);
  EXPECT_EQ(s.points[1].price, 0.4225);
  EXPECT_EQ(s.points[2].price, 0.39);
  EXPECT_EQ(to_unix(s.points[2].time), 1768442400);
}

TEST(PriceHistory, QueryAndAuthHeader) {
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string&) { return HttpResponse{200, R"({"history":[]})"}; };
  const PriceHistoryClient client(transport, api());
  client.fetch_price_history("12 34", 60, from_unix(1000), from_unix(5000));
  ASSERT_EQ(transport->targets.size(), 1u);
  EXPECT_EQ(transport->targets[0], "/prices-history?market=12%2034&fidelity=60&startTs=1000&endTs=5000");
  ASSERT_EQ(transport->headers[0].size(), 1u);
  EXPECT_EQ(transport->headers[0][0].first, "X-Api-Key");
}

TEST(PriceHistory, SevenDayWindowAtHourlyFidelityIsSortedAndBounded) {
  auto transport = std::make_shared<FakeTransport>();
  // Minute-level ticks, delivered out of order, with some outside the window.
  std::string body = R"({"history":[)";
  const std::int64_t start = 1'767'225'600, end = start + 7 * 86400;
  bool first = true;
  for (std::int64_t t = end + 3600; t >= start - 3600; t -= 600) {
    body += (first ? "" : ",") + std::string("{\"t\":") + std::to_string(t) + ",\"p\":0.5}";
    first = false;
  }
  body += "]}";
  transport->handler = [&](const std::string&) { return HttpResponse{200, body}; };
  const PriceHistoryClient client(transport, api());
  const auto s = client.fetch_price_history("tok", 60, from_unix(start), from_unix(end));
  EXPECT_LE(s.points.size(), 7u * 24u);
  EXPECT_GE(s.points.size(), 7u * 24u - 1);
  for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_LT(s.points[i - 1].time, s.points[i].time);
  EXPECT_GE(s.points.front().time, from_unix(start));
  EXPECT_LE(s.points.back().time, from_unix(end));
}

TEST(PriceHistory, OutOfRangePricesAreClamped) {
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string&) {
    return HttpResponse{200, R"({"history":[{"t":10,"p":"1.02"},{"t":3700,"p":-0.01}]})"};
  };
  const PriceHistoryClient client(transport, api());
  const auto s = client.fetch_price_history("tok", 60, from_unix(0), from_unix(7200));
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_EQ(s.points[0].price, 1.0);
  EXPECT_EQ(s.points[1].price, 0.0);
}

TEST(PriceHistory, HttpAndDecodeErrors) {
  auto transport = std::make_shared<FakeTransport>();
  const PriceHistoryClient client(transport, api());
  transport->handler = [](const std::string&) { return HttpResponse{404, "no such market"}; };
  try {
    client.fetch_price_history("unknown", 60, from_unix(0), from_unix(10));
    FAIL();
  } catch (const HttpError& e) {
    EXPECT_EQ(e.status(), 404);
    EXPECT_EQ(e.body_excerpt(), "no such market");
  }
  for (const char* bad : {"not json", R"({"hist":[]})", R"({"history":[{"t":"x","p":0.1}]})",
                          R"({"history":[{"t":1,"p":"abc"}]})", R"({"history":[{"t":1}]})"}) {
    transport->handler = [bad](const std::string&) { return HttpResponse{200, bad}; };
    try {
      client.fetch_price_history("tok", 60, from_unix(0), from_unix(10));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DecodeError) << bad;
    }
  }
}

TEST(PriceHistory, RateLimitBacksOffExponentiallyThenSucceeds) {
  auto transport = std::make_shared<FakeTransport>();
  int remaining_429 = 3;
  transport->handler = [&](const std::string&) {
    if (remaining_429-- > 0) return HttpResponse{429, "slow down"};
    return HttpResponse{200, R"({"history":[{"t":5,"p":0.5}]})"};
  };
  std::vector<long> sleeps;
  const PriceHistoryClient client(transport, api(), RetryPolicy{},
                                  [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  const auto s = client.fetch_price_history("tok", 60, from_unix(0), from_unix(10));
  EXPECT_EQ(s.points.size(), 1u);
  EXPECT_EQ(sleeps, (std::vector<long>{1000, 2000, 4000}));
  EXPECT_EQ(transport->calls, 4);
}

TEST(PriceHistory, RateLimitSurfacesAfterFiveAttempts) {
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string&) { return HttpResponse{429, ""}; };
  std::vector<long> sleeps;
  const PriceHistoryClient client(transport, api(), RetryPolicy{},
                                  [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  try {
    client.fetch_price_history("tok", 60, from_unix(0), from_unix(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
    EXPECT_EQ(exit_status_for(e.code()), ExitStatus::Network);
  }
  EXPECT_EQ(transport->calls, 5);
  EXPECT_EQ(sleeps, (std::vector<long>{1000, 2000, 4000, 8000}));
}

TEST(PriceHistory, OtherServerErrorsAreNotRetried) {
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string&) { return HttpResponse{503, "down"}; };
  const PriceHistoryClient client(transport, api(), RetryPolicy{}, [](auto) {});
  EXPECT_THROW(client.fetch_price_history("tok", 60, from_unix(0), from_unix(10)), HttpError);
  EXPECT_EQ(transport->calls, 1);
}

TEST(PriceHistory, RejectsBadWindowAndFidelity) {
  auto transport = std::make_shared<FakeTransport>();
  const PriceHistoryClient client(transport, api());
  EXPECT_THROW(client.fetch_price_history("tok", 0, from_unix(0), from_unix(10)), Error);
  EXPECT_THROW(client.fetch_price_history("tok", 60, from_unix(10), from_unix(10)), Error);
  EXPECT_EQ(transport->calls, 0);
}

namespace {

MarketManifest manifest() {
  MarketManifest m;
  m.market_id = "flu/market 1";
  m.open_time = from_unix(0);
  m.resolution_time = from_unix(86400);
  for (int c = 0; c < 6; ++c) m.contracts.emplace_back("tok" + std::to_string(c), std::to_string(c * 10) + "+");
  return m;
}

}  // namespace

TEST(Cache, FetchOnceThenServeWithoutNetwork) {
  test::TempDir dir("cache");
  const MarketCache cache(dir.path());
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string&) {
    return HttpResponse{200, R"({"history":[{"t":100,"p":0.2},{"t":7300,"p":0.3}]})"};
  };
  const PriceHistoryClient client(transport, api());
  const auto first = load_or_fetch(manifest(), cache, false, &client);
  EXPECT_EQ(transport->calls, 6);
  EXPECT_EQ(first.contracts.size(), 6u);
  EXPECT_EQ(first.contracts[3].label, "30+");

  const auto second = load_or_fetch(manifest(), cache, false, &client);
  EXPECT_EQ(transport->calls, 6);
  EXPECT_EQ(second, first);
  const auto offline = load_or_fetch(manifest(), cache, true, nullptr);
  EXPECT_EQ(offline, first);
  EXPECT_EQ(offline, decode_market(read_text(cache.path_for("flu/market 1")), "cache"));

  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    EXPECT_EQ(e.path().extension(), ".json") << "leftover temp file " << e.path();
  }
}

TEST(Cache, OfflineMissIsCacheMiss) {
  test::TempDir dir("cache-miss");
  const MarketCache cache(dir.path());
  try {
    load_or_fetch(manifest(), cache, true, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CacheMiss);
  }
}

TEST(Cache, FailedFetchPublishesNothing) {
  test::TempDir dir("cache-fail");
  const MarketCache cache(dir.path());
  auto transport = std::make_shared<FakeTransport>();
  transport->handler = [](const std::string& target) {
    if (target.find("tok4") != std::string::npos) return HttpResponse{500, "boom"};
    return HttpResponse{200, R"({"history":[{"t":100,"p":0.2}]})"};
  };
  const PriceHistoryClient client(transport, api());
  EXPECT_THROW(load_or_fetch(manifest(), cache, false, &client), HttpError);
  EXPECT_FALSE(cache.load("flu/market 1"));
}

TEST(Cache, ConcurrentWritersLeaveOneCompleteFile) {
  test::TempDir dir("cache-race");
  const MarketCache cache(dir.path());
  const MarketRecord r = sample_record();
  std::vector<std::thread> threads;
  std::atomic<bool> torn{false};
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&] {
      for (int i = 0; i < 25; ++i) {
        cache.store(r);
        if (auto got = cache.load(r.market_id); got && !(*got == r)) torn = true;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_FALSE(torn);
  EXPECT_EQ(*cache.load(r.market_id), r);
}

TEST(Manifest, DefaultsOpenTimeToNinetyDaysBeforeResolution) {
  test::TempDir dir("manifest");
  std::ofstream(dir.path() / "m.json")
      << R"([{"market_id":"a","disease":"measles","structure":"thresholds","resolution_time":"2026-04-01T00:00:00Z",)"
         R"("contracts":[{"contract_id":"t1","label":"1,000+ cases"}]}])";
  const auto ms = load_manifests(dir.path() / "m.json");
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].resolution_time - ms[0].open_time, std::chrono::days{90});
  EXPECT_EQ(ms[0].contracts[0].second, "1,000+ cases");
}

TEST(ApiConfig, ReadsEnvironment) {
  ::setenv("PMEVAL_API_BASE_URL", "https://api.example.org/v1", 1);
  ::setenv("PMEVAL_API_AUTH_HEADER", "Authorization", 1);
  ::setenv("PMEVAL_API_TOKEN", "Bearer t", 1);
  const auto c = ApiConfig::from_env();
  EXPECT_EQ(c.base_url, "https://api.example.org/v1");
  EXPECT_EQ(c.prices_path, "/prices-history");
  EXPECT_EQ(c.auth_header, "Authorization");
  ::unsetenv("PMEVAL_API_BASE_URL");
  ::unsetenv("PMEVAL_API_AUTH_HEADER");
  ::unsetenv("PMEVAL_API_TOKEN");
}
