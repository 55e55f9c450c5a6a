#include "atomic/router/search.hpp"

#include <algorithm>
#include <limits>

namespace atomic::router {

namespace {

constexpr epoch_t kNever = std::numeric_limits<epoch_t>::max();
constexpr epoch_t kNone = std::numeric_limits<epoch_t>::min();

struct Earliest {
  epoch_t arrival{kNever};
  int legs{0};
};

/// Round k scans the connections once, boarding only where a journey of at
/// most k-1 legs is ready; so after round k, best[s] is the earliest arrival
/// at s using at most k legs.
Earliest scan(TransitGraph const& g, int from, int to, epoch_t depart_after) {
  auto const n = g.stop_ids.size();
  std::vector<epoch_t> best(n, kNever);
  Earliest out;
  auto const max_rounds = static_cast<int>(g.trips.size());
  for (int k = 1; k <= max_rounds; ++k) {
    std::vector<epoch_t> ready(n, kNever);
    for (auto s = 0U; s < n; ++s) {
      if (best[s] != kNever) {
        ready[s] = best[s] + kTransferSlack;
      }
    }
    ready[static_cast<std::size_t>(from)] = depart_after;

    auto next = best;
    std::vector<bool> on_trip(g.trips.size(), false);
    for (auto const& c : g.connections) {
      auto const t = static_cast<std::size_t>(c.trip);
      if (!on_trip[t] && ready[static_cast<std::size_t>(c.dep_stop)] <= c.dep_time) {
        on_trip[t] = true;
      }
      if (on_trip[t]) {
        auto& b = next[static_cast<std::size_t>(c.arr_stop)];
        b = std::min(b, c.arr_time);
      }
    }
    if (next[static_cast<std::size_t>(to)] < out.arrival) {
      out = {next[static_cast<std::size_t>(to)], k};
    }
    if (next == best) {
      break;
    }
    best = std::move(next);
  }
  return out;
}

/// need[j][s]: latest time one may be ready at s and still reach `to` by
/// `target` with at most j legs (kNone when impossible).
std::vector<std::vector<epoch_t>> latest_ready(TransitGraph const& g, int to, epoch_t target, int legs) {
  auto const n = g.stop_ids.size();
  std::vector<std::vector<epoch_t>> need(static_cast<std::size_t>(legs) + 1, std::vector<epoch_t>(n, kNone));
  for (int j = 1; j <= legs; ++j) {
    auto const& prev = need[static_cast<std::size_t>(j) - 1];
    auto& cur = need[static_cast<std::size_t>(j)];
    for (auto const& trip : g.trips) {
      auto const& ev = trip.events;
      bool can_alight_later = false;
      for (auto i = ev.size(); i-- > 0;) {
        if (can_alight_later) {
          auto& c = cur[static_cast<std::size_t>(ev[i].stop)];
          c = std::max(c, ev[i].departure);
        }
        auto const& e = ev[i];
        if ((e.stop == to && e.arrival <= target) ||
            (j > 1 && prev[static_cast<std::size_t>(e.stop)] != kNone &&
             e.arrival + kTransferSlack <= prev[static_cast<std::size_t>(e.stop)])) {
          can_alight_later = true;
        }
      }
    }
  }
  return need;
}

struct State {
  epoch_t ready{kNever};
  int parent{-1};  // stop of the previous state
  Leg leg;
};

}  // namespace

std::optional<Journey> earliest_arrival(TransitGraph const& g, std::string const& from, std::string const& to,
                                        epoch_t depart_after) {
  auto const f = g.stop_index(from);
  if (f < 0) {
    throw UnknownStop{"unknown stop: " + from};
  }
  auto const t = g.stop_index(to);
  if (t < 0) {
    throw UnknownStop{"unknown stop: " + to};
  }
  if (f == t) {
    return Journey{{}, depart_after};
  }

  auto const best = scan(g, f, t, depart_after);
  if (best.arrival == kNever) {
    return std::nullopt;
  }
  auto const need = latest_ready(g, t, best.arrival, best.legs);

  // Walk forward one leg at a time, always taking the smallest trip id that
  // still admits a completion. Each step keeps, per stop, the earliest ready
  // time reachable through the chosen prefix.
  std::vector<std::map<int, State>> steps(1);
  steps[0][f] = State{depart_after, -1, {}};
  for (int step = 1; step <= best.legs; ++step) {
    auto const remaining = best.legs - step;
    auto const& states = steps.back();
    auto const alight_ok = [&](TripEvent const& e) {
      if (remaining == 0) {
        return e.stop == t && e.arrival <= best.arrival;
      }
      auto const limit = need[static_cast<std::size_t>(remaining)][static_cast<std::size_t>(e.stop)];
      return limit != kNone && e.arrival + kTransferSlack <= limit;
    };

    std::map<int, State> next;
    for (auto const& trip : g.trips) {
      auto const& ev = trip.events;
      for (auto const& [stop, st] : states) {
        for (auto i = 0U; i < ev.size(); ++i) {
          if (ev[i].stop != stop || ev[i].departure < st.ready) {
            continue;
          }
          for (auto k = i + 1; k < ev.size(); ++k) {
            if (!alight_ok(ev[k])) {
              continue;
            }
            auto const ready = ev[k].arrival + kTransferSlack;
            auto& slot = next[ev[k].stop];
            if (ready < slot.ready) {
              slot = State{ready, stop,
                           Leg{trip.trip_id, g.stop_ids[static_cast<std::size_t>(stop)], ev[i].departure,
                               g.stop_ids[static_cast<std::size_t>(ev[k].stop)], ev[k].arrival}};
            }
          }
        }
      }
      if (!next.empty()) {
        break;
      }
    }
    if (next.empty()) {
      throw std::logic_error{"journey reconstruction lost feasibility"};
    }
    steps.push_back(std::move(next));
  }

  Journey j;
  int stop = t;
  for (auto step = steps.size() - 1; step > 0; --step) {
    auto const& st = steps[step].at(stop);
    j.legs.push_back(st.leg);
    stop = st.parent;
  }
  std::reverse(begin(j.legs), end(j.legs));
  j.total_arrival = j.legs.back().alight_time;
  return j;
}

nlohmann::json to_json(Journey const& j) {
  nlohmann::json legs = nlohmann::json::array();
  for (auto const& l : j.legs) {
    legs.push_back({{"tripId", l.trip_id},
                    {"boardStop", l.board_stop},
                    {"boardTime", to_iso8601(l.board_time)},
                    {"alightStop", l.alight_stop},
                    {"alightTime", to_iso8601(l.alight_time)}});
  }
  return {{"legs", legs}, {"arrival", to_iso8601(j.total_arrival)}, {"arrivalEpoch", j.total_arrival}};
}

}  // namespace atomic::router
