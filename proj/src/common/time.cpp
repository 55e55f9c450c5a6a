#include "atomic/common/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace atomic {

namespace {

namespace chr = std::chrono;

template <typename Int>
Int parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) {
    throw TimeFormatError{"truncated time value: " + std::string{s}};
  }
  Int value{};
  auto const* first = s.data() + pos;
  auto const* last = first + len;
  for (auto const* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') {
      throw TimeFormatError{"non-digit in time value: " + std::string{s}};
    }
  }
  std::from_chars(first, last, value);
  return value;
}

void expect_char(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw TimeFormatError{"malformed time value: " + std::string{s}};
  }
}

}  // namespace

epoch_t system_now() {
  return chr::duration_cast<chr::seconds>(chr::system_clock::now().time_since_epoch()).count();
}

ServiceDate::ServiceDate(int year, unsigned month, unsigned day) : year_{year}, month_{month}, day_{day} {
  auto const ymd = chr::year{year} / chr::month{month} / chr::day{day};
  if (!ymd.ok()) {
    throw TimeFormatError{"invalid calendar date"};
  }
}

ServiceDate ServiceDate::parse(std::string_view s) {
  if (s.size() != 8) {
    throw TimeFormatError{"service date must be YYYYMMDD: " + std::string{s}};
  }
  return ServiceDate{parse_fixed<int>(s, 0, 4), parse_fixed<unsigned>(s, 4, 2), parse_fixed<unsigned>(s, 6, 2)};
}

ServiceDate ServiceDate::from_days(std::int64_t days) {
  auto const ymd = chr::year_month_day{chr::sys_days{chr::days{days}}};
  return ServiceDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
}

ServiceDate ServiceDate::from_epoch(epoch_t t) {
  auto days = t / 86400;
  if (t % 86400 < 0) {
    --days;
  }
  return from_days(days);
}

std::int64_t ServiceDate::days_since_epoch() const {
  auto const ymd = chr::year{year_} / chr::month{month_} / chr::day{day_};
  return chr::sys_days{ymd}.time_since_epoch().count();
}

unsigned ServiceDate::weekday_index() const {
  // 1970-01-01 was a Thursday (index 3).
  auto const d = days_since_epoch();
  return static_cast<unsigned>(((d % 7) + 7 + 3) % 7);
}

std::string ServiceDate::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02u", year_, month_, day_);
  return buf;
}

std::string to_iso8601(epoch_t t) {
  auto const date = ServiceDate::from_epoch(t);
  auto secs = t - date.midnight_epoch();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", date.year(), date.month(), date.day(),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

epoch_t parse_iso8601(std::string_view s) {
  if (s.size() < 19) {
    throw TimeFormatError{"ISO-8601 timestamp too short: " + std::string{s}};
  }
  auto const year = parse_fixed<int>(s, 0, 4);
  expect_char(s, 4, '-');
  auto const month = parse_fixed<unsigned>(s, 5, 2);
  expect_char(s, 7, '-');
  auto const day = parse_fixed<unsigned>(s, 8, 2);
  if (s[10] != 'T' && s[10] != ' ') {
    throw TimeFormatError{"malformed ISO-8601 timestamp: " + std::string{s}};
  }
  auto const hh = parse_fixed<int>(s, 11, 2);
  expect_char(s, 13, ':');
  auto const mm = parse_fixed<int>(s, 14, 2);
  expect_char(s, 16, ':');
  auto const ss = parse_fixed<int>(s, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw TimeFormatError{"time of day out of range: " + std::string{s}};
  }

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      ++pos;
    }
  }

  epoch_t offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6) {
      expect_char(s, pos + 3, ':');
      offset = parse_fixed<int>(s, pos + 1, 2) * 3600 + parse_fixed<int>(s, pos + 4, 2) * 60;
      if (s[pos] == '-') {
        offset = -offset;
      }
    } else {
      throw TimeFormatError{"malformed ISO-8601 offset: " + std::string{s}};
    }
  }

  auto const date = ServiceDate{year, month, day};
  return date.midnight_epoch() + hh * 3600 + mm * 60 + ss - offset;
}

}  // namespace atomic
