#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace loggrouper {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

// Accepts "YYYY-MM-DD[T ]hh:mm:ss[.ffffff][Z|+hh:mm|-hh:mm]". A missing zone
// designator is read as UTC. Returns nullopt on anything else.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// RFC3339 in UTC; the fractional part is printed only when non-zero.
std::string format_timestamp(Timestamp ts);

Timestamp min_timestamp();
Timestamp max_timestamp();

}  // namespace loggrouper
