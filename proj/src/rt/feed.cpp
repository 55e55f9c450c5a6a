#include "atomic/rt/feed.hpp"

#include "atomic/rt/wire.hpp"

namespace atomic::rt {

namespace {

// Field numbers from gtfs-realtime.proto.
namespace f {
constexpr std::uint32_t kHeader = 1, kEntity = 2;
constexpr std::uint32_t kVersion = 1, kIncrementality = 2, kHeaderTimestamp = 3;
constexpr std::uint32_t kId = 1, kTripUpdate = 3, kVehicle = 4;
constexpr std::uint32_t kTuTrip = 1, kStopTimeUpdate = 2, kTuTimestamp = 4;
constexpr std::uint32_t kTripId = 1;
constexpr std::uint32_t kStopSequence = 1, kArrival = 2, kStopId = 4;
constexpr std::uint32_t kDelay = 1, kTime = 2;
constexpr std::uint32_t kVpTrip = 1, kPosition = 2, kVpTimestamp = 5, kVehicleDescriptor = 8;
constexpr std::uint32_t kLatitude = 1, kLongitude = 2, kBearing = 3;
constexpr std::uint32_t kVehicleId = 1;
}  // namespace f

using pb::Reader;
using pb::Writer;

Writer trip_descriptor(std::string const& trip_id) {
  Writer w;
  w.bytes_field(f::kTripId, trip_id);
  return w;
}

Writer encode_stu(StopTimeUpdate const& u) {
  Writer w;
  if (u.stop_sequence) {
    w.uint32_field(f::kStopSequence, *u.stop_sequence);
  }
  if (u.arrival_delay || u.arrival_time) {
    Writer ev;
    if (u.arrival_delay) {
      ev.int32_field(f::kDelay, *u.arrival_delay);
    }
    if (u.arrival_time) {
      ev.int64_field(f::kTime, *u.arrival_time);
    }
    w.message_field(f::kArrival, ev);
  }
  if (!u.stop_id.empty()) {
    w.bytes_field(f::kStopId, u.stop_id);
  }
  return w;
}

Writer encode_payload(TripUpdate const& t) {
  Writer w;
  w.message_field(f::kTuTrip, trip_descriptor(t.trip_id));
  for (auto const& u : t.stop_time_updates) {
    w.message_field(f::kStopTimeUpdate, encode_stu(u));
  }
  if (t.timestamp) {
    w.uint64_field(f::kTuTimestamp, *t.timestamp);
  }
  return w;
}

Writer encode_payload(VehiclePosition const& v) {
  Writer w;
  if (v.trip_id) {
    w.message_field(f::kVpTrip, trip_descriptor(*v.trip_id));
  }
  if (v.latitude && v.longitude) {
    Writer pos;
    pos.float_field(f::kLatitude, *v.latitude);
    pos.float_field(f::kLongitude, *v.longitude);
    if (v.bearing) {
      pos.float_field(f::kBearing, *v.bearing);
    }
    w.message_field(f::kPosition, pos);
  }
  if (v.timestamp) {
    w.uint64_field(f::kVpTimestamp, *v.timestamp);
  }
  if (v.vehicle_id) {
    Writer d;
    d.bytes_field(f::kVehicleId, *v.vehicle_id);
    w.message_field(f::kVehicleDescriptor, d);
  }
  return w;
}

std::string decode_trip_id(std::string_view bytes) {
  std::string id;
  Reader r{bytes};
  while (r.next()) {
    if (r.field() == f::kTripId) {
      id = std::string{r.read_bytes()};
    } else {
      r.skip();
    }
  }
  return id;
}

StopTimeUpdate decode_stu(std::string_view bytes) {
  StopTimeUpdate u;
  Reader r{bytes};
  while (r.next()) {
    switch (r.field()) {
      case f::kStopSequence: u.stop_sequence = static_cast<std::uint32_t>(r.read_varint()); break;
      case f::kStopId: u.stop_id = std::string{r.read_bytes()}; break;
      case f::kArrival: {
        Reader ev{r.read_bytes()};
        while (ev.next()) {
          if (ev.field() == f::kDelay) {
            u.arrival_delay = ev.read_int32();
          } else if (ev.field() == f::kTime) {
            u.arrival_time = ev.read_int64();
          } else {
            ev.skip();
          }
        }
        break;
      }
      default: r.skip();
    }
  }
  return u;
}

TripUpdate decode_trip_update(std::string_view bytes) {
  TripUpdate t;
  auto has_trip = false;
  Reader r{bytes};
  while (r.next()) {
    switch (r.field()) {
      case f::kTuTrip:
        t.trip_id = decode_trip_id(r.read_bytes());
        has_trip = true;
        break;
      case f::kStopTimeUpdate: t.stop_time_updates.push_back(decode_stu(r.read_bytes())); break;
      case f::kTuTimestamp: t.timestamp = r.read_varint(); break;
      default: r.skip();
    }
  }
  if (!has_trip) {
    throw pb::DecodeError{"TripUpdate without trip"};
  }
  return t;
}

VehiclePosition decode_vehicle(std::string_view bytes) {
  VehiclePosition v;
  Reader r{bytes};
  while (r.next()) {
    switch (r.field()) {
      case f::kVpTrip: v.trip_id = decode_trip_id(r.read_bytes()); break;
      case f::kPosition: {
        Reader p{r.read_bytes()};
        while (p.next()) {
          if (p.field() == f::kLatitude) {
            v.latitude = p.read_float();
          } else if (p.field() == f::kLongitude) {
            v.longitude = p.read_float();
          } else if (p.field() == f::kBearing) {
            v.bearing = p.read_float();
          } else {
            p.skip();
          }
        }
        break;
      }
      case f::kVpTimestamp: v.timestamp = r.read_varint(); break;
      case f::kVehicleDescriptor: {
        Reader d{r.read_bytes()};
        while (d.next()) {
          if (d.field() == f::kVehicleId) {
            v.vehicle_id = std::string{d.read_bytes()};
          } else {
            d.skip();
          }
        }
        break;
      }
      default: r.skip();
    }
  }
  return v;
}

FeedEntity decode_entity(std::string_view bytes) {
  std::optional<std::string> id;
  std::optional<std::variant<TripUpdate, VehiclePosition>> payload;
  Reader r{bytes};
  while (r.next()) {
    switch (r.field()) {
      case f::kId: id = std::string{r.read_bytes()}; break;
      case f::kTripUpdate: payload = decode_trip_update(r.read_bytes()); break;
      case f::kVehicle: payload = decode_vehicle(r.read_bytes()); break;
      default: r.skip();
    }
  }
  if (!id) {
    throw pb::DecodeError{"FeedEntity without id"};
  }
  if (!payload) {
    throw pb::DecodeError{"FeedEntity " + *id + " carries neither trip_update nor vehicle"};
  }
  return FeedEntity{*id, std::move(*payload)};
}

}  // namespace

std::string encode(FeedMessage const& m) {
  Writer header;
  header.bytes_field(f::kVersion, m.gtfs_realtime_version);
  header.enum_field(f::kIncrementality, static_cast<int>(m.incrementality));
  if (m.timestamp) {
    header.uint64_field(f::kHeaderTimestamp, *m.timestamp);
  }
  Writer out;
  out.message_field(f::kHeader, header);
  for (auto const& e : m.entities) {
    Writer ent;
    ent.bytes_field(f::kId, e.id);
    auto const field = std::holds_alternative<TripUpdate>(e.payload) ? f::kTripUpdate : f::kVehicle;
    std::visit([&](auto const& p) { ent.message_field(field, encode_payload(p)); }, e.payload);
    out.message_field(f::kEntity, ent);
  }
  return out.take();
}

FeedMessage decode(std::string_view bytes) {
  FeedMessage m;
  auto has_header = false;
  auto has_version = false;
  Reader r{bytes};
  while (r.next()) {
    if (r.field() == f::kHeader) {
      has_header = true;
      Reader h{r.read_bytes()};
      while (h.next()) {
        switch (h.field()) {
          case f::kVersion:
            m.gtfs_realtime_version = std::string{h.read_bytes()};
            has_version = true;
            break;
          case f::kIncrementality: m.incrementality = static_cast<Incrementality>(h.read_int32()); break;
          case f::kHeaderTimestamp: m.timestamp = h.read_varint(); break;
          default: h.skip();
        }
      }
    } else if (r.field() == f::kEntity) {
      m.entities.push_back(decode_entity(r.read_bytes()));
    } else {
      r.skip();
    }
  }
  if (!has_header || !has_version) {
    throw pb::DecodeError{"FeedMessage without header version"};
  }
  return m;
}

nlohmann::json to_json(FeedMessage const& m) {
  nlohmann::json out{{"header",
                      {{"gtfsRealtimeVersion", m.gtfs_realtime_version},
                       {"incrementality", m.incrementality == Incrementality::full_dataset ? "FULL_DATASET"
                                                                                           : "DIFFERENTIAL"}}}};
  if (m.timestamp) {
    out["header"]["timestamp"] = *m.timestamp;
  }
  auto entities = nlohmann::json::array();
  for (auto const& e : m.entities) {
    nlohmann::json j{{"id", e.id}};
    if (auto const* t = std::get_if<TripUpdate>(&e.payload)) {
      auto updates = nlohmann::json::array();
      for (auto const& u : t->stop_time_updates) {
        nlohmann::json ju{{"stopId", u.stop_id}};
        if (u.stop_sequence) {
          ju["stopSequence"] = *u.stop_sequence;
        }
        if (u.arrival_delay) {
          ju["arrivalDelay"] = *u.arrival_delay;
        }
        if (u.arrival_time) {
          ju["arrivalTime"] = *u.arrival_time;
        }
        updates.push_back(std::move(ju));
      }
      j["tripUpdate"] = {{"tripId", t->trip_id}, {"stopTimeUpdates", std::move(updates)}};
      if (t->timestamp) {
        j["tripUpdate"]["timestamp"] = *t->timestamp;
      }
    } else {
      auto const& v = std::get<VehiclePosition>(e.payload);
      nlohmann::json jv = nlohmann::json::object();
      if (v.vehicle_id) {
        jv["vehicleId"] = *v.vehicle_id;
      }
      if (v.trip_id) {
        jv["tripId"] = *v.trip_id;
      }
      if (v.latitude && v.longitude) {
        jv["position"] = {{"latitude", *v.latitude}, {"longitude", *v.longitude}};
        if (v.bearing) {
          jv["position"]["bearing"] = *v.bearing;
        }
      }
      if (v.timestamp) {
        jv["timestamp"] = *v.timestamp;
      }
      j["vehicle"] = std::move(jv);
    }
    entities.push_back(std::move(j));
  }
  out["entities"] = std::move(entities);
  return out;
}

}  // namespace atomic::rt
