#include "msdelay/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace msdelay {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  return std::from_chars(first, last, out).ec == std::errc{};
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  if (text.size() != 19 || (text[10] != ' ' && text[10] != 'T') || text[13] != ':' ||
      text[16] != ':') {
    return std::nullopt;
  }
  const auto day = parse_date(text.substr(0, 10));
  if (!day) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mm) || !read_int(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return Timestamp{*day} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss};
}

std::string format_date(Date day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  const auto secs = (ts - day).count();
  const auto s = static_cast<int>(secs);
  char buf[32];
  std::snprintf(buf, sizeof buf, " %02d:%02d:%02d", s / 3600, (s / 60) % 60, s % 60);
  return format_date(day) + buf;
}

int weekday_index(Date day) {
  const std::chrono::weekday wd{day};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

int minutes_of_day(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  return static_cast<int>(std::chrono::duration_cast<std::chrono::minutes>(ts - day).count());
}

Date date_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

}  // namespace msdelay
