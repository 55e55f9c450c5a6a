#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "atomic/common/time.hpp"
#include "atomic/ngsi/entity.hpp"

namespace atomic::mobility {

using ngsi::GeoPoint;

// Field names follow the GTFS columns. Times in StopTime are seconds since
// service-day midnight and may exceed 24h.

struct Agency {
  std::string agency_id;
  std::string name;
  std::string url;
  std::string timezone;
  friend bool operator==(Agency const&, Agency const&) = default;
};

struct Stop {
  std::string stop_id;
  std::string name;
  GeoPoint location;
  friend bool operator==(Stop const&, Stop const&) = default;
};

struct Route {
  std::string route_id;
  std::string agency_ref;
  std::string short_name;
  int route_type{3};
  friend bool operator==(Route const&, Route const&) = default;
};

struct Service {
  std::string service_id;
  std::array<bool, 7> weekdays{};  // Monday first
  ServiceDate start_date;
  ServiceDate end_date;

  /// Weekday flag and date range both admit `d`.
  bool runs_on(ServiceDate const& d) const {
    return start_date <= d && d <= end_date && weekdays[d.weekday_index()];
  }
  friend bool operator==(Service const&, Service const&) = default;
};

struct Trip {
  std::string trip_id;
  std::string route_ref;
  std::string service_ref;
  std::string headsign;
  friend bool operator==(Trip const&, Trip const&) = default;
};

struct StopTime {
  std::string trip_ref;
  std::string stop_ref;
  int stop_sequence{0};
  int arrival_time{0};
  int departure_time{0};
  friend bool operator==(StopTime const&, StopTime const&) = default;
};

struct ArrivalEstimation {
  std::string trip_ref;
  std::string stop_ref;
  epoch_t estimated_arrival{0};
  std::optional<epoch_t> observed_at;
  friend bool operator==(ArrivalEstimation const&, ArrivalEstimation const&) = default;
};

struct VehiclePosition {
  std::string vehicle_id;
  std::optional<std::string> trip_ref;
  GeoPoint location;
  std::optional<double> bearing;
  std::optional<epoch_t> observed_at;
  friend bool operator==(VehiclePosition const&, VehiclePosition const&) = default;
};

struct FeedPointer {
  std::string feed_id;
  std::string source_url;
  std::string version;
  ServiceDate valid_from;
  ServiceDate valid_until;
  friend bool operator==(FeedPointer const&, FeedPointer const&) = default;
};

struct ParkingSpotGroup {
  std::string group_id;
  GeoPoint location;
  int total_spots{1};
  int available_spots{0};
  std::optional<epoch_t> observed_at;
  friend bool operator==(ParkingSpotGroup const&, ParkingSpotGroup const&) = default;
};

struct TrafficFlowObserved {
  std::string segment_id;
  GeoPoint location;
  double intensity{0.0};  // vehicles per hour
  std::optional<epoch_t> observed_at;
  friend bool operator==(TrafficFlowObserved const&, TrafficFlowObserved const&) = default;
};

using TypedEntity = std::variant<Agency, Stop, Route, Service, Trip, StopTime, ArrivalEstimation, VehiclePosition,
                                 FeedPointer, ParkingSpotGroup, TrafficFlowObserved>;

/// Broker type names, indexed like TypedEntity's alternatives.
inline constexpr std::array<char const*, 11> kTypeNames = {
    "GtfsAgency",        "GtfsStop",        "GtfsRoute",       "GtfsService",
    "GtfsTrip",          "GtfsStopTime",    "ArrivalEstimation", "VehiclePosition",
    "GtfsFeedPointer",   "ParkingSpotGroup", "TrafficFlowObserved"};

/// The six types that make up a static GTFS feed.
inline constexpr std::array<char const*, 6> kStaticTypes = {"GtfsAgency", "GtfsStop", "GtfsRoute",
                                                            "GtfsService", "GtfsTrip", "GtfsStopTime"};

bool is_model_type(std::string_view type);

class ModelError : public std::runtime_error {
public:
  enum class Kind { unknown_entity_type, missing_mandatory_field };

  ModelError(Kind kind, std::string const& what) : std::runtime_error{what}, kind_{kind} {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// "urn:ngsi:<Type>:<key>"
std::string urn(std::string_view type, std::string_view key);
/// Strips the "urn:ngsi:<Type>:" prefix; plain ids pass through unchanged.
std::string ref_key(std::string_view type, std::string_view ref);

std::string entity_id(TypedEntity const& e);

ngsi::ContextEntity to_context(TypedEntity const& e);
/// Throws ModelError.
TypedEntity from_context(ngsi::ContextEntity const& e);

template <typename T>
T from_context_as(ngsi::ContextEntity const& e) {
  auto typed = from_context(e);
  if (auto* v = std::get_if<T>(&typed)) {
    return std::move(*v);
  }
  throw ModelError{ModelError::Kind::unknown_entity_type, "entity " + e.id + " is a " + e.type};
}

}  // namespace atomic::mobility
