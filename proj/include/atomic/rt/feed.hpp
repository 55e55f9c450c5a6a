#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "atomic/common/time.hpp"
#include "json.hpp"

namespace atomic::rt {

// The subset of the GTFS-realtime FeedMessage schema the bridge emits.

struct StopTimeUpdate {
  std::optional<std::uint32_t> stop_sequence;
  std::string stop_id;
  std::optional<std::int32_t> arrival_delay;  // seconds, signed
  std::optional<std::int64_t> arrival_time;   // epoch seconds
  friend bool operator==(StopTimeUpdate const&, StopTimeUpdate const&) = default;
};

struct TripUpdate {
  std::string trip_id;
  std::vector<StopTimeUpdate> stop_time_updates;  // sorted by stop_sequence
  std::optional<std::uint64_t> timestamp;
  friend bool operator==(TripUpdate const&, TripUpdate const&) = default;
};

struct VehiclePosition {
  std::optional<std::string> trip_id;
  std::optional<std::string> vehicle_id;
  std::optional<float> latitude;
  std::optional<float> longitude;
  std::optional<float> bearing;
  std::optional<std::uint64_t> timestamp;
  friend bool operator==(VehiclePosition const&, VehiclePosition const&) = default;
};

struct FeedEntity {
  std::string id;
  std::variant<TripUpdate, VehiclePosition> payload;
  friend bool operator==(FeedEntity const&, FeedEntity const&) = default;
};

enum class Incrementality { full_dataset = 0, differential = 1 };

struct FeedMessage {
  std::string gtfs_realtime_version{"2.0"};
  Incrementality incrementality{Incrementality::full_dataset};
  std::optional<std::uint64_t> timestamp;
  std::vector<FeedEntity> entities;
  friend bool operator==(FeedMessage const&, FeedMessage const&) = default;
};

/// Every set field is written, including zero values, so presence survives
/// a round trip through proto2 decoders. Fields appear in field-number order.
std::string encode(FeedMessage const& m);

/// Unknown fields are skipped. Throws pb::DecodeError on malformed input or
/// a missing required field (header, version, entity id, trip).
FeedMessage decode(std::string_view bytes);

nlohmann::json to_json(FeedMessage const& m);

}  // namespace atomic::rt
