#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "atomic/mobility/model.hpp"

namespace atomic::compose {

enum class FixtureSize { tiny, small };

FixtureSize parse_fixture_size(std::string_view s);  // throws std::invalid_argument
std::string_view to_string(FixtureSize);

/// A route query whose answer follows from how the city was built.
struct Probe {
  std::string from_stop;
  std::string to_stop;
  int depart_after{0};  // seconds since service-day midnight
  std::string trip_id;  // trip that reaches to_stop
  int expected_arrival{0};
  int legs{1};
};

struct ScheduledTime {
  std::string trip_id;
  std::string stop_id;
  int stop_sequence{0};
  int arrival{0};
  int departure{0};
};

struct Fixture {
  std::uint32_t seed{0};
  FixtureSize size{FixtureSize::tiny};
  std::vector<mobility::TypedEntity> entities;
  std::vector<Probe> probes;
  std::vector<ScheduledTime> samples;  // first and last stop of every trip

  /// Entities as broker JSON, in generation order.
  nlohmann::json entities_json() const;
  /// Counts per entity type, probes and samples.
  nlohmann::json manifest() const;
};

/// Deterministic per (seed, size) on every platform: only raw mt19937 output
/// is consumed, never a library distribution.
///  tiny:  1 agency, 4 stops, 2 routes, 1 service, 3 trips, 8 stop times,
///         1 parking group
///  small: 2 agencies, 20 stops, 6 routes, 2 services, 30 trips,
///         150 stop times, 3 parking groups, 2 traffic segments
/// Every service runs daily from 2020-01-01 to 2035-12-31.
Fixture gen_fixture(std::uint32_t seed, FixtureSize size);

}  // namespace atomic::compose
