#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "atomic/gtfs/feed.hpp"

namespace atomic::rt {

struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scheduled absolute arrivals for one service day. Service-day midnight is
/// taken in UTC: feed times are service-local and no timezone database is
/// consulted.
class ScheduleIndex {
public:
  struct Entry {
    epoch_t arrival{0};
    int stop_sequence{0};
  };

  ScheduleIndex() = default;

  /// Indexes trips whose service runs on `date`. Throws ScheduleError when
  /// the feed is not valid on `date`. A stop visited twice by one trip keeps
  /// its first visit.
  static ScheduleIndex build(gtfs::GtfsFeed const& feed, ServiceDate date);

  std::optional<Entry> find(std::string const& trip_id, std::string const& stop_id) const;
  bool has_trip(std::string const& trip_id) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  ServiceDate date() const { return date_; }

private:
  ServiceDate date_;
  std::map<std::pair<std::string, std::string>, Entry, std::less<>> entries_;
  std::map<std::string, int, std::less<>> trips_;
};

}  // namespace atomic::rt
