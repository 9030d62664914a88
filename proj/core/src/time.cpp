#include "pmeval/time.hpp"

#include <cctype>
#include <cstdio>

#include "pmeval/error.hpp"

namespace pmeval {
namespace {

using namespace std::chrono;

[[noreturn]] void bad_time(std::string_view text) {
  throw Error(ErrorCode::SchemaError, "malformed timestamp '" + std::string(text) + "'");
}

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) bad_time(text);
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) bad_time(text);
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) bad_time(text);
}

sys_days read_date(std::string_view text) {
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = read_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_digits(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad_time(text);
  return sys_days{ymd};
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  if (text.size() < 20) bad_time(text);
  const sys_days date = read_date(text);
  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') bad_time(text);
  const int hh = read_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = read_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = read_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) bad_time(text);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) bad_time(text);
  }
  if (pos >= text.size()) bad_time(text);
  seconds offset{0};
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int oh = read_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ':');
    const int om = read_digits(text, pos + 4, 2);
    offset = seconds{sign * (oh * 3600 + om * 60)};
    pos += 6;
  } else {
    bad_time(text);
  }
  if (pos != text.size()) bad_time(text);
  return Timestamp{date} + hours{hh} + minutes{mm} + seconds{ss} - offset;
}

Timestamp parse_timestamp_or_date(std::string_view text) {
  if (text.size() == 10) return Timestamp{read_date(text)} + hours{12};
  return parse_rfc3339(text);
}

std::string format_rfc3339(Timestamp t) {
  const sys_days day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(Timestamp t) {
  const year_month_day ymd{floor<days>(t)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

IsoWeek iso_week(Timestamp t) {
  const sys_days d = floor<days>(t);
  // Thursday of the same ISO week decides the ISO year.
  const weekday wd{d};
  const int iso_wd = wd.iso_encoding();  // Mon=1 .. Sun=7
  const sys_days thursday = d + days{4 - iso_wd};
  const year iso_year = year_month_day{thursday}.year();
  const sys_days jan1 = sys_days{iso_year / January / 1};
  const auto week = static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
  return IsoWeek{static_cast<int>(iso_year), week};
}

std::string format_iso_week(IsoWeek w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02u", w.year, w.week);
  return buf;
}

}  // namespace pmeval
