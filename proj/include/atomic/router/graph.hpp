#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "atomic/gtfs/feed.hpp"
#include "atomic/rt/feed.hpp"

namespace atomic::router {

using mobility::GeoPoint;

struct FeedNotValidOnDate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One visit of a trip to a stop, in absolute epoch seconds.
struct TripEvent {
  int stop{0};  // index into TransitGraph::stop_ids
  int stop_sequence{0};
  epoch_t scheduled_arrival{0};
  epoch_t scheduled_departure{0};
  epoch_t arrival{0};  // after delays
  epoch_t departure{0};
};

struct TripSchedule {
  std::string trip_id;
  std::vector<TripEvent> events;  // by stop_sequence
};

struct Connection {
  int dep_stop{0};
  int arr_stop{0};
  epoch_t dep_time{0};
  epoch_t arr_time{0};
  int trip{0};      // index into TransitGraph::trips
  int position{0};  // departs from trips[trip].events[position]
};

/// Timetable of one service day. Immutable once built; apply_realtime
/// returns a new graph.
struct TransitGraph {
  ServiceDate date;
  std::vector<std::string> stop_ids;  // sorted
  std::vector<GeoPoint> stop_locations;
  std::vector<TripSchedule> trips;    // sorted by trip id
  /// Ordered by (dep_time, trip, position).
  std::vector<Connection> connections;
  /// Delays in force, as named by the last realtime message.
  std::map<std::pair<std::string, std::string>, std::int32_t> delays;

  /// -1 when absent.
  int stop_index(std::string_view id) const;
  int trip_index(std::string_view id) const;
};

/// One connection per consecutive stop_time pair of every trip whose service
/// runs on `date`. Throws FeedNotValidOnDate.
TransitGraph build_graph(gtfs::GtfsFeed const& feed, ServiceDate date);

/// Replaces the graph's delays with those of `rt` (a full dataset). A delay
/// named for a stop holds from that stop's arrival until the next stop the
/// message names for the same trip. Event times never run backwards along a
/// trip: a negative delay cannot move an event before the previous one.
/// Unknown trips and stops are ignored.
TransitGraph apply_realtime(TransitGraph const& graph, rt::FeedMessage const& rt);

}  // namespace atomic::router
