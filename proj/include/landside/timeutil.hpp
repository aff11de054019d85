#pragma once

#include <cstdint>
#include <string>

namespace landside {

/// Parses an ISO-8601 UTC timestamp ("2022-05-01T08:15:00" with optional
/// trailing 'Z', 'T' or ' ' separator) into epoch seconds.
/// Throws DataError on malformed input.
std::int64_t parse_iso8601_utc(const std::string& text);

/// Formats epoch seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601_utc(std::int64_t epoch_seconds);

}  // namespace landside
