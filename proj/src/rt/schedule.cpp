#include "atomic/rt/schedule.hpp"

namespace atomic::rt {

ScheduleIndex ScheduleIndex::build(gtfs::GtfsFeed const& feed, ServiceDate date) {
  if (!gtfs::feed_valid_on(feed, date)) {
    throw ScheduleError{"feed is not valid on " + date.str()};
  }
  std::map<std::string, bool> runs;
  for (auto const& s : feed.services) {
    runs[s.service_id] = s.runs_on(date);
  }
  std::map<std::string, bool> active_trip;
  for (auto const& t : feed.trips) {
    active_trip[t.trip_id] = runs[t.service_ref];
  }

  ScheduleIndex idx;
  idx.date_ = date;
  auto const midnight = date.midnight_epoch();
  for (auto const& st : feed.stop_times) {
    if (!active_trip[st.trip_ref]) {
      continue;
    }
    idx.entries_.try_emplace({st.trip_ref, st.stop_ref}, Entry{midnight + st.arrival_time, st.stop_sequence});
    ++idx.trips_[st.trip_ref];
  }
  return idx;
}

std::optional<ScheduleIndex::Entry> ScheduleIndex::find(std::string const& trip_id, std::string const& stop_id) const {
  auto const it = entries_.find(std::pair{trip_id, stop_id});
  return it == end(entries_) ? std::nullopt : std::optional{it->second};
}

bool ScheduleIndex::has_trip(std::string const& trip_id) const { return trips_.contains(trip_id); }

}  // namespace atomic::rt
