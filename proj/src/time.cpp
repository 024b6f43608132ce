#include "teta/time.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "teta/error.hpp"

namespace teta {
namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len,
              int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

Timestamp compose(int y, int mo, int d, int h, int mi, int s,
                  std::string_view text) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw ParseError("invalid timestamp: '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

Timestamp parse_default(std::string_view text) {
  // YYYY-MM-DD HH:MM:SS, optionally with 'T' and trailing fractional seconds.
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  bool ok = text.size() >= 19 && read_int(text, 0, 4, y) && text[4] == '-' &&
            read_int(text, 5, 2, mo) && text[7] == '-' &&
            read_int(text, 8, 2, d) && (text[10] == ' ' || text[10] == 'T') &&
            read_int(text, 11, 2, h) && text[13] == ':' &&
            read_int(text, 14, 2, mi) && text[16] == ':' &&
            read_int(text, 17, 2, s);
  if (ok && text.size() > 19) {
    // Fractional seconds are truncated; anything else is garbage.
    ok = text[19] == '.';
    for (std::size_t i = 20; ok && i < text.size(); ++i) {
      ok = text[i] >= '0' && text[i] <= '9';
    }
  }
  if (!ok) throw ParseError("invalid timestamp: '" + std::string(text) + "'");
  return compose(y, mo, d, h, mi, s, text);
}

}  // namespace

Timestamp parse_timestamp(std::string_view text, std::string_view format) {
  if (format == kDefaultTimestampFormat) return parse_default(text);
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in >> std::get_time(&tm, std::string(format).c_str());
  if (in.fail()) {
    throw ParseError("timestamp '" + std::string(text) +
                     "' does not match format '" + std::string(format) + "'");
  }
  return compose(tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                 tm.tm_min, tm.tm_sec, text);
}

std::string format_timestamp(Timestamp t, char separator) {
  auto day_start = floor<days>(t);
  year_month_day ymd{day_start};
  hh_mm_ss<seconds> hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02ld:%02ld:%02ld",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), separator,
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimeOfDay parse_time_of_day(std::string_view text) {
  // H:MM:SS or HH:MM:SS with HH possibly >= 24.
  auto c1 = text.find(':');
  auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
  int h = 0, m = 0, s = 0;
  bool ok = c2 != std::string_view::npos && c1 > 0 && c1 <= 3 &&
            read_int(text, 0, c1, h) && c2 - c1 == 3 &&
            read_int(text, c1 + 1, 2, m) && text.size() - c2 - 1 == 2 &&
            read_int(text, c2 + 1, 2, s) && h >= 0 && m >= 0 && m < 60 &&
            s >= 0 && s < 60;
  if (!ok) throw ParseError("invalid time of day: '" + std::string(text) + "'");
  return TimeOfDay{hours{h} + minutes{m} + seconds{s}};
}

std::string format_time_of_day(TimeOfDay tod) {
  auto total = tod.since_midnight.count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld",
                static_cast<long long>(total / 3600),
                static_cast<long long>(total / 60 % 60),
                static_cast<long long>(total % 60));
  return buf;
}

Timestamp start_of_day(Timestamp t) {
  return Timestamp{floor<days>(t)};
}

Timestamp anchor_time_of_day(TimeOfDay tod, Timestamp reference) {
  return start_of_day(reference) + tod.since_midnight;
}

std::int64_t seconds_of_day(Timestamp t) {
  return (t - start_of_day(t)).count();
}

}  // namespace teta
