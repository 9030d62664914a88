#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace pmeval {

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

inline Timestamp from_unix(std::int64_t seconds) { return Timestamp{std::chrono::seconds{seconds}}; }
inline std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)". Throws Error(SchemaError).
Timestamp parse_rfc3339(std::string_view text);

/// Accepts RFC 3339 or a bare "YYYY-MM-DD"; bare dates map to 12:00 UTC.
Timestamp parse_timestamp_or_date(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

/// "YYYY-MM-DD".
std::string format_date(Timestamp t);

struct IsoWeek {
  int year;
  unsigned week;

  auto operator<=>(const IsoWeek&) const = default;
};

IsoWeek iso_week(Timestamp t);

/// "2026-W03".
std::string format_iso_week(IsoWeek w);

}  // namespace pmeval
