#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace presy {

// Millisecond precision keeps RFC 3339 round-trips exact.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

// "2026-10-16T08:38:00.123Z"
std::string format_rfc3339(Timestamp ts);

// Accepts the UTC form produced by format_rfc3339, with or without the
// fractional part, and numeric offsets ("+02:00"). Throws Error(corrupt_data).
Timestamp parse_rfc3339(std::string_view text);

} // namespace presy
