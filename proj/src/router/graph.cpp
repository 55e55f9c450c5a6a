#include "atomic/router/graph.hpp"

#include <algorithm>

namespace atomic::router {

namespace {

/// Recomputes delayed event times. `delays` maps event position to the delay
/// named there.
void propagate(TripSchedule& t, std::map<int, std::int32_t> const& delays) {
  std::int64_t d = 0;
  epoch_t prev = std::numeric_limits<epoch_t>::min();
  for (auto i = 0U; i < t.events.size(); ++i) {
    if (auto const it = delays.find(static_cast<int>(i)); it != end(delays)) {
      d = it->second;
    }
    auto& e = t.events[i];
    e.arrival = std::max(e.scheduled_arrival + d, prev);
    e.departure = std::max(e.scheduled_departure + d, e.arrival);
    prev = e.departure;
  }
}

void rebuild_connections(TransitGraph& g) {
  g.connections.clear();
  for (auto t = 0U; t < g.trips.size(); ++t) {
    auto const& ev = g.trips[t].events;
    for (auto i = 0U; i + 1 < ev.size(); ++i) {
      g.connections.push_back({ev[i].stop, ev[i + 1].stop, ev[i].departure, ev[i + 1].arrival, static_cast<int>(t),
                               static_cast<int>(i)});
    }
  }
  std::sort(begin(g.connections), end(g.connections), [](Connection const& a, Connection const& b) {
    return std::tie(a.dep_time, a.trip, a.position) < std::tie(b.dep_time, b.trip, b.position);
  });
}

}  // namespace

int TransitGraph::stop_index(std::string_view id) const {
  auto const it = std::lower_bound(begin(stop_ids), end(stop_ids), id);
  return it != end(stop_ids) && *it == id ? static_cast<int>(it - begin(stop_ids)) : -1;
}

int TransitGraph::trip_index(std::string_view id) const {
  auto const it = std::lower_bound(begin(trips), end(trips), id,
                                   [](TripSchedule const& t, std::string_view x) { return t.trip_id < x; });
  return it != end(trips) && it->trip_id == id ? static_cast<int>(it - begin(trips)) : -1;
}

TransitGraph build_graph(gtfs::GtfsFeed const& feed, ServiceDate date) {
  if (!gtfs::feed_valid_on(feed, date)) {
    throw FeedNotValidOnDate{"feed has no service covering " + date.str()};
  }
  TransitGraph g;
  g.date = date;

  auto stops = feed.stops;
  std::sort(begin(stops), end(stops), [](auto const& a, auto const& b) { return a.stop_id < b.stop_id; });
  for (auto const& s : stops) {
    g.stop_ids.push_back(s.stop_id);
    g.stop_locations.push_back(s.location);
  }

  std::map<std::string, bool> runs;
  for (auto const& s : feed.services) {
    runs[s.service_id] = s.runs_on(date);
  }
  std::map<std::string, std::vector<gtfs::StopTime const*>> by_trip;
  for (auto const& t : feed.trips) {
    if (auto const it = runs.find(t.service_ref); it != end(runs) && it->second) {
      by_trip[t.trip_id];
    }
  }
  for (auto const& st : feed.stop_times) {
    if (auto const it = by_trip.find(st.trip_ref); it != end(by_trip)) {
      it->second.push_back(&st);
    }
  }

  auto const midnight = date.midnight_epoch();
  for (auto& [trip_id, rows] : by_trip) {
    std::sort(begin(rows), end(rows), [](auto const* a, auto const* b) { return a->stop_sequence < b->stop_sequence; });
    TripSchedule t{trip_id, {}};
    for (auto const* st : rows) {
      auto const stop = g.stop_index(st->stop_ref);
      if (stop < 0) {
        throw std::invalid_argument{"trip " + trip_id + " visits unknown stop " + st->stop_ref};
      }
      TripEvent e;
      e.stop = stop;
      e.stop_sequence = st->stop_sequence;
      e.scheduled_arrival = midnight + st->arrival_time;
      e.scheduled_departure = midnight + st->departure_time;
      t.events.push_back(e);
    }
    propagate(t, {});
    g.trips.push_back(std::move(t));
  }
  rebuild_connections(g);
  return g;
}

TransitGraph apply_realtime(TransitGraph const& graph, rt::FeedMessage const& rt) {
  TransitGraph g = graph;
  g.delays.clear();
  std::map<int, std::map<int, std::int32_t>> per_trip;

  for (auto const& entity : rt.entities) {
    auto const* tu = std::get_if<rt::TripUpdate>(&entity.payload);
    if (tu == nullptr) {
      continue;
    }
    auto const t = g.trip_index(tu->trip_id);
    if (t < 0) {
      continue;
    }
    auto const& events = g.trips[static_cast<std::size_t>(t)].events;
    for (auto const& u : tu->stop_time_updates) {
      auto const stop = u.stop_id.empty() ? -1 : g.stop_index(u.stop_id);
      auto const it = std::find_if(begin(events), end(events), [&](TripEvent const& e) {
        return u.stop_sequence ? e.stop_sequence == static_cast<int>(*u.stop_sequence) : e.stop == stop;
      });
      if (it == end(events)) {
        continue;
      }
      std::int64_t delay = 0;
      if (u.arrival_delay) {
        delay = *u.arrival_delay;
      } else if (u.arrival_time) {
        delay = *u.arrival_time - it->scheduled_arrival;
      } else {
        continue;
      }
      auto const clamped = static_cast<std::int32_t>(
          std::clamp<std::int64_t>(delay, std::numeric_limits<std::int32_t>::min(),
                                   std::numeric_limits<std::int32_t>::max()));
      per_trip[t][static_cast<int>(it - begin(events))] = clamped;
      g.delays[{tu->trip_id, g.stop_ids[static_cast<std::size_t>(it->stop)]}] = clamped;
    }
  }

  for (auto t = 0U; t < g.trips.size(); ++t) {
    auto const it = per_trip.find(static_cast<int>(t));
    propagate(g.trips[t], it == end(per_trip) ? std::map<int, std::int32_t>{} : it->second);
  }
  rebuild_connections(g);
  return g;
}

}  // namespace atomic::router
