#include <gtest/gtest.h>

#include "pmeval/csv.hpp"
#include "pmeval/error.hpp"
#include "pmeval/time.hpp"

using namespace pmeval;

TEST(Time, Rfc3339Variants) {
  EXPECT_EQ(to_unix(parse_rfc3339("1970-01-01T00:00:00Z")), 0);
  EXPECT_EQ(to_unix(parse_rfc3339("2026-01-16T00:00:00Z")), 1768521600);
  EXPECT_EQ(parse_rfc3339("2026-01-16T02:00:00+02:00"), parse_rfc3339("2026-01-16T00:00:00Z"));
  EXPECT_EQ(parse_rfc3339("2026-01-15T19:30:00-04:30"), parse_rfc3339("2026-01-16T00:00:00Z"));
  EXPECT_EQ(parse_rfc3339("2026-01-16T00:00:00.750Z"), parse_rfc3339("2026-01-16T00:00:00Z"));
  EXPECT_THROW(parse_rfc3339("2026-01-16"), Error);
  EXPECT_THROW(parse_rfc3339("2026-02-30T00:00:00Z"), Error);
  EXPECT_THROW(parse_rfc3339("2026-01-16T00:00:00"), Error);
}

TEST(Time, BareDatesMapToNoonUtc) {
  EXPECT_EQ(parse_timestamp_or_date("2026-03-02"), parse_rfc3339("2026-03-02T12:00:00Z"));
  EXPECT_EQ(parse_timestamp_or_date("2026-03-02T01:00:00Z"), parse_rfc3339("2026-03-02T01:00:00Z"));
}

TEST(Time, FormatRoundTrip) {
  const auto t = parse_rfc3339("2026-05-01T13:14:15Z");
  EXPECT_EQ(format_rfc3339(t), "2026-05-01T13:14:15Z");
  EXPECT_EQ(format_date(t), "2026-05-01");
}

TEST(Time, IsoWeeksAcrossYearBoundary) {
  EXPECT_EQ(format_iso_week(iso_week(parse_rfc3339("2026-01-01T00:00:00Z"))), "2026-W01");
  EXPECT_EQ(format_iso_week(iso_week(parse_rfc3339("2025-12-29T00:00:00Z"))), "2026-W01");
  EXPECT_EQ(format_iso_week(iso_week(parse_rfc3339("2027-01-01T00:00:00Z"))), "2026-W53");
  EXPECT_EQ(format_iso_week(iso_week(parse_rfc3339("2026-01-18T23:59:59Z"))), "2026-W03");
  EXPECT_EQ(format_iso_week(iso_week(parse_rfc3339("2026-01-19T00:00:00Z"))), "2026-W04");
}

TEST(Csv, QuotedFieldsAndLineNumbers) {
  const auto t = csv::Table::parse("a,b\r\n1,\"x, \"\"y\"\"\"\n\n2,\"multi\nline\"\n3,z\n", "mem.csv");
  ASSERT_EQ(t.rows().size(), 3u);
  EXPECT_EQ(t.rows()[0].fields[1], "x, \"y\"");
  EXPECT_EQ(t.rows()[0].line, 2u);
  EXPECT_EQ(t.rows()[1].fields[1], "multi\nline");
  EXPECT_EQ(t.rows()[2].line, 6u);
  EXPECT_EQ(*t.column("b"), 1u);
  EXPECT_FALSE(t.column("c"));
  EXPECT_THROW(t.require_column("c"), Error);
}

TEST(Csv, NumberErrorsNameFileAndLine) {
  try {
    csv::parse_number("abc", "scores.csv", 7, "brier");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    EXPECT_NE(std::string(e.what()).find("scores.csv:7"), std::string::npos);
  }
  EXPECT_EQ(csv::parse_number("-1.5e3", "f", 1, "v"), -1500.0);
  EXPECT_THROW(csv::parse_number("1.5x", "f", 1, "v"), Error);
  EXPECT_THROW(csv::parse_number("", "f", 1, "v"), Error);
}

TEST(Csv, EscapeAndFormat) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::join_row({"a", "b\"c"}), "a,\"b\"\"c\"\n");
  EXPECT_EQ(csv::format_number(0.1), "0.1");
  EXPECT_EQ(csv::format_number(1.0 / 3.0), "0.333333333333333");
}
