#ifndef ROUTEPLAN_CIVIL_TIME_HPP_
#define ROUTEPLAN_CIVIL_TIME_HPP_

#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>
#include <string_view>

#include "routeplan/error.hpp"

namespace routeplan {

/// Local civil time at one-second resolution. No timezone or DST
/// arithmetic is ever applied.
using CivilTime = std::chrono::local_seconds;

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kMinutesPerWeek = 7 * kMinutesPerDay;

/// Monday = 0 ... Sunday = 6.
inline int weekday_index(CivilTime t) {
  const std::chrono::weekday wd{std::chrono::floor<std::chrono::days>(t)};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

inline int minute_of_day(CivilTime t) {
  const auto since_midnight = t - std::chrono::floor<std::chrono::days>(t);
  return static_cast<int>(
      std::chrono::duration_cast<std::chrono::minutes>(since_midnight).count());
}

inline CivilTime make_time(int year, unsigned month, unsigned day, int hour = 0,
                           int minute = 0, int second = 0) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  return local_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` (a space may replace the `T`).
inline CivilTime parse_iso(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const std::string buf(text);
  const int n = std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d,
                            &sep, &h, &mi, &consumed);
  if (n < 6 || (sep != 'T' && sep != ' ')) {
    throw ParseError("invalid datetime '" + buf + "'");
  }
  std::string_view rest = std::string_view(buf).substr(consumed);
  if (!rest.empty()) {
    int extra = 0;
    if (std::sscanf(buf.c_str() + consumed, ":%2d%n", &s, &extra) != 1 ||
        static_cast<size_t>(extra) != rest.size()) {
      throw ParseError("invalid datetime '" + buf + "'");
    }
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{unsigned(mo)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) {
    throw ParseError("invalid datetime '" + buf + "'");
  }
  return make_time(y, mo, d, h, mi, s);
}

inline std::string format_iso(CivilTime t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char out[32];
  std::snprintf(out, sizeof out, "%04d-%02u-%02uT%02d:%02d:%02d",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return out;
}

/// Wall-clock local time of this host.
inline CivilTime local_now() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  localtime_r(&now, &parts);
  return make_time(parts.tm_year + 1900, parts.tm_mon + 1, parts.tm_mday,
                   parts.tm_hour, parts.tm_min, parts.tm_sec);
}

}  // namespace routeplan

#endif  // ROUTEPLAN_CIVIL_TIME_HPP_
