#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atomic {

/// Seconds since the Unix epoch, UTC.
using epoch_t = std::int64_t;

/// A clock returning epoch seconds. Services take one so tests can pin time.
using Clock = std::function<epoch_t()>;

epoch_t system_now();

struct TimeFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A calendar day encoded as YYYYMMDD in GTFS files.
class ServiceDate {
public:
  ServiceDate() = default;
  ServiceDate(int year, unsigned month, unsigned day);

  /// Parses "YYYYMMDD"; throws TimeFormatError on malformed or impossible dates.
  static ServiceDate parse(std::string_view yyyymmdd);
  static ServiceDate from_days(std::int64_t days_since_epoch);
  static ServiceDate from_epoch(epoch_t t);

  int year() const { return year_; }
  unsigned month() const { return month_; }
  unsigned day() const { return day_; }

  std::int64_t days_since_epoch() const;
  /// Epoch seconds of 00:00:00 UTC on this day.
  epoch_t midnight_epoch() const { return days_since_epoch() * 86400; }
  /// 0 = Monday ... 6 = Sunday, matching GTFS calendar column order.
  unsigned weekday_index() const;

  std::string str() const;

  friend auto operator<=>(ServiceDate const&, ServiceDate const&) = default;

private:
  int year_{1970};
  unsigned month_{1};
  unsigned day_{1};
};

/// "2019-06-15T08:30:00Z"
std::string to_iso8601(epoch_t t);
/// Accepts "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds and a
/// trailing "Z" or "+00:00". Other offsets are applied.
epoch_t parse_iso8601(std::string_view text);

}  // namespace atomic
