#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace teta {

// Naive local time: no zone conversion is ever applied.
using Timestamp = std::chrono::sys_seconds;

inline constexpr std::string_view kDefaultTimestampFormat = "%Y-%m-%d %H:%M:%S";

// Parses `text` according to a strftime-style `format`. The default format
// ("YYYY-MM-DD HH:MM:SS") is handled by a fast path; a 'T' separator is
// accepted there as well. Throws ParseError.
Timestamp parse_timestamp(std::string_view text,
                          std::string_view format = kDefaultTimestampFormat);

std::string format_timestamp(Timestamp t, char separator = ' ');

// A schedule time-of-day. Hours may run past 24 (service-day convention), so
// this is a plain offset from midnight rather than a clock reading.
struct TimeOfDay {
  std::chrono::seconds since_midnight{0};
  friend bool operator==(const TimeOfDay&, const TimeOfDay&) = default;
};

TimeOfDay parse_time_of_day(std::string_view text);
std::string format_time_of_day(TimeOfDay tod);

// Midnight of the calendar day containing `t`.
Timestamp start_of_day(Timestamp t);

// Anchors a time-of-day on the calendar date of `reference`; offsets of 24h
// or more roll into the following day(s).
Timestamp anchor_time_of_day(TimeOfDay tod, Timestamp reference);

// Seconds since midnight of `t`'s calendar day, in [0, 86400).
std::int64_t seconds_of_day(Timestamp t);

}  // namespace teta
