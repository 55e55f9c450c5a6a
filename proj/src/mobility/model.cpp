#include "atomic/mobility/model.hpp"

#include <algorithm>
#include <cmath>

namespace atomic::mobility {

using ngsi::ContextEntity;

namespace {

constexpr std::array<char const*, 7> kWeekdays = {"monday", "tuesday", "wednesday", "thursday",
                                                  "friday", "saturday", "sunday"};

template <typename T>
std::size_t index_of() {
  return TypedEntity{T{}}.index();
}

template <typename T>
std::string_view type_name() {
  return kTypeNames[index_of<T>()];
}

[[noreturn]] void missing(ContextEntity const& e, std::string const& field, std::string const& why = "missing") {
  throw ModelError{ModelError::Kind::missing_mandatory_field, e.type + " " + e.id + ": " + field + " " + why};
}

std::string req_text(ContextEntity const& e, std::string const& name) {
  if (auto v = e.text(name)) {
    return *v;
  }
  missing(e, name);
}

double req_number(ContextEntity const& e, std::string const& name) {
  if (auto v = e.number(name)) {
    return *v;
  }
  missing(e, name);
}

std::int64_t req_integer(ContextEntity const& e, std::string const& name) {
  auto const v = req_number(e, name);
  if (std::trunc(v) != v || std::abs(v) > 9.0e15) {
    missing(e, name, "is not an integer");
  }
  return static_cast<std::int64_t>(v);
}

int req_int(ContextEntity const& e, std::string const& name) {
  auto const v = req_integer(e, name);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    missing(e, name, "is out of range");
  }
  return static_cast<int>(v);
}

GeoPoint req_geo(ContextEntity const& e, std::string const& name) {
  if (auto v = e.geo(name)) {
    return *v;
  }
  missing(e, name);
}

bool req_bool(ContextEntity const& e, std::string const& name) {
  if (auto v = e.boolean(name)) {
    return *v;
  }
  missing(e, name);
}

ServiceDate req_date(ContextEntity const& e, std::string const& name) {
  auto const text = req_text(e, name);
  try {
    return ServiceDate::parse(text);
  } catch (TimeFormatError const&) {
    missing(e, name, "is not a YYYYMMDD date");
  }
}

std::optional<epoch_t> observed(ContextEntity const& e, std::string const& name) {
  auto const it = e.attributes.find(name);
  return it == end(e.attributes) ? std::nullopt : it->second.observed_at;
}

std::string req_ref(ContextEntity const& e, std::string const& name, std::string_view target_type) {
  return ref_key(target_type, req_text(e, name));
}

}  // namespace

bool is_model_type(std::string_view type) {
  return std::find(begin(kTypeNames), end(kTypeNames), type) != end(kTypeNames);
}

std::string urn(std::string_view type, std::string_view key) {
  return "urn:ngsi:" + std::string{type} + ":" + std::string{key};
}

std::string ref_key(std::string_view type, std::string_view ref) {
  auto const prefix = urn(type, "");
  if (ref.starts_with(prefix)) {
    ref.remove_prefix(prefix.size());
  }
  return std::string{ref};
}

std::string entity_id(TypedEntity const& e) {
  return std::visit(
      [](auto const& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        auto const type = type_name<T>();
        if constexpr (std::is_same_v<T, Agency>) {
          return urn(type, x.agency_id);
        } else if constexpr (std::is_same_v<T, Stop>) {
          return urn(type, x.stop_id);
        } else if constexpr (std::is_same_v<T, Route>) {
          return urn(type, x.route_id);
        } else if constexpr (std::is_same_v<T, Service>) {
          return urn(type, x.service_id);
        } else if constexpr (std::is_same_v<T, Trip>) {
          return urn(type, x.trip_id);
        } else if constexpr (std::is_same_v<T, StopTime>) {
          return urn(type, x.trip_ref + ":" + std::to_string(x.stop_sequence));
        } else if constexpr (std::is_same_v<T, ArrivalEstimation>) {
          return urn(type, x.trip_ref + ":" + x.stop_ref);
        } else if constexpr (std::is_same_v<T, VehiclePosition>) {
          return urn(type, x.vehicle_id);
        } else if constexpr (std::is_same_v<T, FeedPointer>) {
          return urn(type, x.feed_id);
        } else if constexpr (std::is_same_v<T, ParkingSpotGroup>) {
          return urn(type, x.group_id);
        } else {
          return urn(type, x.segment_id);
        }
      },
      e);
}

ContextEntity to_context(TypedEntity const& typed) {
  ContextEntity e{entity_id(typed), kTypeNames[typed.index()], {}};
  std::visit(
      [&](auto const& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Agency>) {
          e.set("agencyId", x.agency_id).set("agencyName", x.name).set("agencyUrl", x.url);
          e.set("agencyTimezone", x.timezone);
        } else if constexpr (std::is_same_v<T, Stop>) {
          e.set("stopId", x.stop_id).set("stopName", x.name).set("location", x.location);
        } else if constexpr (std::is_same_v<T, Route>) {
          e.set("routeId", x.route_id).set("agencyRef", urn("GtfsAgency", x.agency_ref));
          e.set("routeShortName", x.short_name).set("routeType", static_cast<double>(x.route_type));
        } else if constexpr (std::is_same_v<T, Service>) {
          e.set("serviceId", x.service_id);
          for (auto i = 0U; i < kWeekdays.size(); ++i) {
            e.set(kWeekdays[i], x.weekdays[i]);
          }
          e.set("startDate", x.start_date.str()).set("endDate", x.end_date.str());
        } else if constexpr (std::is_same_v<T, Trip>) {
          e.set("tripId", x.trip_id).set("routeRef", urn("GtfsRoute", x.route_ref));
          e.set("serviceRef", urn("GtfsService", x.service_ref)).set("tripHeadsign", x.headsign);
        } else if constexpr (std::is_same_v<T, StopTime>) {
          e.set("tripRef", urn("GtfsTrip", x.trip_ref)).set("stopRef", urn("GtfsStop", x.stop_ref));
          e.set("stopSequence", static_cast<double>(x.stop_sequence));
          e.set("arrivalTime", static_cast<double>(x.arrival_time));
          e.set("departureTime", static_cast<double>(x.departure_time));
        } else if constexpr (std::is_same_v<T, ArrivalEstimation>) {
          e.set("tripRef", urn("GtfsTrip", x.trip_ref)).set("stopRef", urn("GtfsStop", x.stop_ref));
          e.set("estimatedArrivalTime", static_cast<double>(x.estimated_arrival), x.observed_at);
        } else if constexpr (std::is_same_v<T, VehiclePosition>) {
          e.set("vehicleId", x.vehicle_id).set("location", x.location, x.observed_at);
          if (x.trip_ref) {
            e.set("tripRef", urn("GtfsTrip", *x.trip_ref));
          }
          if (x.bearing) {
            e.set("bearing", *x.bearing);
          }
        } else if constexpr (std::is_same_v<T, FeedPointer>) {
          e.set("feedId", x.feed_id).set("sourceUrl", x.source_url).set("version", x.version);
          e.set("validFrom", x.valid_from.str()).set("validUntil", x.valid_until.str());
        } else if constexpr (std::is_same_v<T, ParkingSpotGroup>) {
          e.set("groupId", x.group_id).set("location", x.location);
          e.set("totalSpots", static_cast<double>(x.total_spots));
          e.set("availableSpots", static_cast<double>(x.available_spots), x.observed_at);
        } else {
          e.set("segmentId", x.segment_id).set("location", x.location);
          e.set("intensity", x.intensity, x.observed_at);
        }
      },
      typed);
  return e;
}

TypedEntity from_context(ContextEntity const& e) {
  auto const& t = e.type;
  if (t == "GtfsAgency") {
    return Agency{req_text(e, "agencyId"), req_text(e, "agencyName"), req_text(e, "agencyUrl"),
                  req_text(e, "agencyTimezone")};
  }
  if (t == "GtfsStop") {
    return Stop{req_text(e, "stopId"), req_text(e, "stopName"), req_geo(e, "location")};
  }
  if (t == "GtfsRoute") {
    return Route{req_text(e, "routeId"), req_ref(e, "agencyRef", "GtfsAgency"), req_text(e, "routeShortName"),
                 req_int(e, "routeType")};
  }
  if (t == "GtfsService") {
    Service s;
    s.service_id = req_text(e, "serviceId");
    for (auto i = 0U; i < kWeekdays.size(); ++i) {
      s.weekdays[i] = req_bool(e, kWeekdays[i]);
    }
    s.start_date = req_date(e, "startDate");
    s.end_date = req_date(e, "endDate");
    return s;
  }
  if (t == "GtfsTrip") {
    return Trip{req_text(e, "tripId"), req_ref(e, "routeRef", "GtfsRoute"), req_ref(e, "serviceRef", "GtfsService"),
                req_text(e, "tripHeadsign")};
  }
  if (t == "GtfsStopTime") {
    return StopTime{req_ref(e, "tripRef", "GtfsTrip"), req_ref(e, "stopRef", "GtfsStop"),
                    req_int(e, "stopSequence"), req_int(e, "arrivalTime"), req_int(e, "departureTime")};
  }
  if (t == "ArrivalEstimation") {
    return ArrivalEstimation{req_ref(e, "tripRef", "GtfsTrip"), req_ref(e, "stopRef", "GtfsStop"),
                             req_integer(e, "estimatedArrivalTime"), observed(e, "estimatedArrivalTime")};
  }
  if (t == "VehiclePosition") {
    VehiclePosition v;
    v.vehicle_id = req_text(e, "vehicleId");
    v.location = req_geo(e, "location");
    v.observed_at = observed(e, "location");
    if (e.has("tripRef")) {
      v.trip_ref = req_ref(e, "tripRef", "GtfsTrip");
    }
    if (e.has("bearing")) {
      v.bearing = req_number(e, "bearing");
    }
    return v;
  }
  if (t == "GtfsFeedPointer") {
    return FeedPointer{req_text(e, "feedId"), req_text(e, "sourceUrl"), req_text(e, "version"),
                       req_date(e, "validFrom"), req_date(e, "validUntil")};
  }
  if (t == "ParkingSpotGroup") {
    return ParkingSpotGroup{req_text(e, "groupId"), req_geo(e, "location"), req_int(e, "totalSpots"),
                            req_int(e, "availableSpots"), observed(e, "availableSpots")};
  }
  if (t == "TrafficFlowObserved") {
    return TrafficFlowObserved{req_text(e, "segmentId"), req_geo(e, "location"), req_number(e, "intensity"),
                               observed(e, "intensity")};
  }
  throw ModelError{ModelError::Kind::unknown_entity_type, "unknown entity type '" + t + "' for " + e.id};
}

}  // namespace atomic::mobility
