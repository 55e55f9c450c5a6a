#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "atomic/router/graph.hpp"

namespace atomic::router {

/// Minimum time between alighting one trip and boarding another at the same stop.
inline constexpr epoch_t kTransferSlack = 120;

struct UnknownStop : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Leg {
  std::string trip_id;
  std::string board_stop;
  epoch_t board_time{0};
  std::string alight_stop;
  epoch_t alight_time{0};
  friend bool operator==(Leg const&, Leg const&) = default;
};

struct Journey {
  std::vector<Leg> legs;  // empty when from == to
  epoch_t total_arrival{0};
  friend bool operator==(Journey const&, Journey const&) = default;
};

/// Earliest arrival at `to` boarding no earlier than `depart_after`, with
/// kTransferSlack at every change of trip. Among equally early journeys the
/// one with fewer legs wins, then the lexicographically smaller sequence of
/// trip ids. nullopt when no journey exists. Throws UnknownStop.
std::optional<Journey> earliest_arrival(TransitGraph const& g, std::string const& from, std::string const& to,
                                        epoch_t depart_after);

nlohmann::json to_json(Journey const& j);

}  // namespace atomic::router
