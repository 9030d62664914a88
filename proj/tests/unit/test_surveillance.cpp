#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>

#include "pmeval/error.hpp"
#include "pmeval/surveillance.hpp"
#include "test_support.hpp"

using namespace pmeval;

namespace {

constexpr std::int64_t kDay = 86400;

SurveillanceSnapshot snap(std::int64_t t, double v) { return {from_unix(t), "k", v, "src"}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no pmeval::Error thrown";
  return ErrorCode::ConfigError;
}

std::filesystem::path write(const test::TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir.path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Ingest, ThreeRowsOneTarget) {
  test::TempDir dir("surv");
  const auto store = ingest_snapshots(write(dir, "a.csv",
                                            "target_key,published,value,source\n"
                                            "flu,2026-01-09,10,cdc\nflu,2026-01-02,8,cdc\nflu,2026-01-16T18:00:00Z,13,cdc\n"));
  ASSERT_EQ(store.size(), 1u);
  const auto& s = store.at("flu").snapshots();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].as_of_value, 8);
  EXPECT_EQ(s[0].published, parse_rfc3339("2026-01-02T12:00:00Z"));
  EXPECT_EQ(s[2].published, parse_rfc3339("2026-01-16T18:00:00Z"));
}

TEST(Ingest, DirectoryMergesIdenticalAndRejectsConflicts) {
  test::TempDir dir("surv-dir");
  write(dir, "a.csv", "target_key,published,value,source\nflu,2026-01-02,8,cdc\nmeasles,2026-01-07,40,cdc\n");
  write(dir, "b.csv", "target_key,published,value,source\nflu,2026-01-02,8,cdc\nflu,2026-01-09,7.5,cdc\n");
  const auto store = ingest_snapshots(dir.path());
  EXPECT_EQ(store.at("flu").snapshots().size(), 2u);
  EXPECT_EQ(store.at("flu").snapshots()[1].as_of_value, 7.5);  // revisions may go down
  EXPECT_EQ(store.at("measles").snapshots().size(), 1u);

  write(dir, "c.csv", "target_key,published,value,source\nflu,2026-01-02,9,cdc\n");
  EXPECT_EQ(code_of([&] { ingest_snapshots(dir.path()); }), ErrorCode::DuplicatePublication);
}

TEST(Ingest, SchemaErrors) {
  test::TempDir dir("surv-bad");
  EXPECT_EQ(code_of([&] { ingest_snapshots(write(dir, "a.csv", "target_key,published,value\nflu,2026-01-02,1\n")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { ingest_snapshots(write(dir, "b.csv", "target_key,published,value,source\nflu,yesterday,1,x\n")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { ingest_snapshots(write(dir, "c.csv", "target_key,published,value,source\nflu,2026-01-02,-1,x\n")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { ingest_snapshots(dir.path() / "nope"); }), ErrorCode::IoError);
}

TEST(Series, DuplicatePublicationRejected) {
  EXPECT_EQ(code_of([] { SurveillanceSeries("k", {snap(kDay, 1), snap(kDay, 1)}); }), ErrorCode::DuplicatePublication);
}

TEST(ValueAsOf, Examples) {
  const SurveillanceSeries s("k", {snap(8 * kDay, 14), snap(1 * kDay, 10)});
  EXPECT_EQ(*value_as_of(s, from_unix(5 * kDay)), 10);
  EXPECT_EQ(*value_as_of(s, from_unix(8 * kDay)), 14);
  EXPECT_FALSE(value_as_of(s, from_unix(0)));
  EXPECT_EQ(*value_as_of(s, from_unix(100 * kDay)), 14);
  EXPECT_EQ(s.history_as_of(from_unix(7 * kDay)), (std::vector<double>{10}));
}

TEST(ValueAsOf, NeverLooksAhead) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> t(0, 1000 * kDay);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SurveillanceSnapshot> snaps;
    std::set<std::int64_t> used;
    for (int i = 0; i < 20; ++i) {
      const auto pub = t(rng);
      if (used.insert(pub).second) snaps.push_back(snap(pub, static_cast<double>(pub % 997)));
    }
    const SurveillanceSeries s("k", snaps);
    std::int64_t prev_pub = -1;
    std::vector<std::int64_t> queries(50);
    for (auto& q : queries) q = t(rng);
    std::sort(queries.begin(), queries.end());
    for (const auto q : queries) {
      const auto* latest = s.latest_at_or_before(from_unix(q));
      if (!latest) {
        EXPECT_FALSE(value_as_of(s, from_unix(q)));
        continue;
      }
      EXPECT_LE(latest->published, from_unix(q));
      EXPECT_GE(to_unix(latest->published), prev_pub);
      prev_pub = to_unix(latest->published);
      for (const auto& other : s.snapshots()) {
        if (other.published <= from_unix(q)) EXPECT_LE(other.published, latest->published);
      }
    }
  }
}

TEST(Resolve, SettlesOnFirstPublicationAtOrAfterResolution) {
  const auto part = make_partition({0, 2, 4, 6});
  MarketRecord m;
  m.market_id = "m";
  m.resolution_time = from_unix(7 * kDay);
  const SurveillanceSeries s("k", {snap(6 * kDay, 5.0), snap(9 * kDay, 6.2), snap(16 * kDay, 7.0)});
  const auto o = resolve_outcome(m, s, part);
  EXPECT_EQ(o.value, 6.2);
  EXPECT_EQ(o.bin_index, 3u);

  const SurveillanceSeries edge("k", {snap(7 * kDay, 4.0)});
  EXPECT_EQ(resolve_outcome(m, edge, part).bin_index, 2u);

  const SurveillanceSeries early("k", {snap(6 * kDay, 5.0)});
  EXPECT_EQ(code_of([&] { resolve_outcome(m, early, part); }), ErrorCode::Unresolved);
}

TEST(Resolve, BelowPartitionIsAnError) {
  MarketRecord m;
  m.market_id = "m";
  m.resolution_time = from_unix(kDay);
  const SurveillanceSeries s("k", {snap(kDay, 5.0)});
  EXPECT_EQ(code_of([&] { resolve_outcome(m, s, make_partition({10, 20})); }), ErrorCode::BelowPartition);
}
