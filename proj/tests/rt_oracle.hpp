#pragma once

// Helpers around the libprotobuf-generated GTFS-realtime classes plus a
// reference replay of notifications, shared by the bridge unit tests and the
// acceptance suite.

#include <google/protobuf/descriptor.h>
#include <google/protobuf/message.h>
#include <google/protobuf/unknown_field_set.h>

#include <map>
#include <sstream>
#include <string>

#include "atomic/compose/fixture.hpp"
#include "gtfs-realtime.pb.h"

namespace atomic::test {

/// True when neither `m` nor any nested message carries unknown fields.
inline bool free_of_unknown_fields(google::protobuf::Message const& m) {
  auto const* refl = m.GetReflection();
  if (!refl->GetUnknownFields(m).empty()) {
    return false;
  }
  std::vector<google::protobuf::FieldDescriptor const*> fields;
  refl->ListFields(m, &fields);
  for (auto const* f : fields) {
    if (f->cpp_type() != google::protobuf::FieldDescriptor::CPPTYPE_MESSAGE) {
      continue;
    }
    if (f->is_repeated()) {
      for (int i = 0; i < refl->FieldSize(m, f); ++i) {
        if (!free_of_unknown_fields(refl->GetRepeatedMessage(m, f, i))) {
          return false;
        }
      }
    } else if (!free_of_unknown_fields(refl->GetMessage(m, f))) {
      return false;
    }
  }
  return true;
}

struct OracleResult {
  bool ok{false};
  std::string problem;
  transit_realtime::FeedMessage message;
};

/// Parses with libprotobuf and checks required fields, unknown fields, and
/// that re-serialization reproduces the input byte for byte.
inline OracleResult oracle_decode(std::string const& bytes) {
  OracleResult r;
  if (!r.message.ParseFromString(bytes)) {
    r.problem = "libprotobuf rejected the bytes";
    return r;
  }
  if (!r.message.IsInitialized()) {
    r.problem = "missing required fields: " + r.message.InitializationErrorString();
    return r;
  }
  if (!free_of_unknown_fields(r.message)) {
    r.problem = "unknown fields present";
    return r;
  }
  if (r.message.SerializeAsString() != bytes) {
    r.problem = "re-serialization differs from the emitted bytes";
    return r;
  }
  r.ok = true;
  return r;
}

/// entity id -> canonical text of its payload.
inline std::map<std::string, std::string> canonical_view(transit_realtime::FeedMessage const& m) {
  std::map<std::string, std::string> out;
  for (auto const& e : m.entity()) {
    std::ostringstream s;
    if (e.has_trip_update()) {
      s << "trip " << e.trip_update().trip().trip_id();
      for (auto const& u : e.trip_update().stop_time_update()) {
        s << " | " << u.stop_sequence() << ' ' << u.stop_id() << ' ' << u.arrival().delay() << ' '
          << u.arrival().time();
      }
    }
    if (e.has_vehicle()) {
      auto const& v = e.vehicle();
      s << "vehicle " << v.vehicle().id() << " trip=" << (v.has_trip() ? v.trip().trip_id() : "-") << " pos="
        << v.position().latitude() << ',' << v.position().longitude()
        << " bearing=" << (v.position().has_bearing() ? std::to_string(v.position().bearing()) : "-");
    }
    out[e.id()] = s.str();
  }
  return out;
}

/// Independent fold of notifications into the expected feed content.
class ReferenceReplay {
public:
  ReferenceReplay(compose::Fixture const& fx, ServiceDate date) : midnight_{date.midnight_epoch()} {
    for (auto const& e : fx.entities) {
      if (auto const* st = std::get_if<mobility::StopTime>(&e)) {
        schedule_.try_emplace({st->trip_ref, st->stop_ref}, std::pair{st->stop_sequence, st->arrival_time});
      }
    }
  }

  /// Returns false when the estimation is outside the schedule.
  bool estimation(std::string const& trip, std::string const& stop, epoch_t est) {
    auto const it = schedule_.find({trip, stop});
    if (it == end(schedule_)) {
      return false;
    }
    auto const scheduled = midnight_ + it->second.second;
    trips_[trip][it->second.first] = std::to_string(it->second.first) + ' ' + stop + ' ' +
                                     std::to_string(est - scheduled) + ' ' + std::to_string(est);
    return true;
  }

  void vehicle(std::string const& id, std::optional<std::string> const& trip, double lat, double lon,
               std::optional<double> bearing) {
    std::ostringstream s;
    s << "vehicle " << id << " trip=" << trip.value_or("-") << " pos=" << static_cast<float>(lat) << ','
      << static_cast<float>(lon) << " bearing=" << (bearing ? std::to_string(static_cast<float>(*bearing)) : "-");
    vehicles_["vehicle:" + id] = s.str();
  }

  std::map<std::string, std::string> trip_view() const {
    std::map<std::string, std::string> out;
    for (auto const& [trip, stops] : trips_) {
      std::string s = "trip " + trip;
      for (auto const& [seq, text] : stops) {
        s += " | " + text;
      }
      out["trip:" + trip] = s;
    }
    return out;
  }

  std::map<std::string, std::string> const& vehicle_view() const { return vehicles_; }

private:
  epoch_t midnight_;
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> schedule_;
  std::map<std::string, std::map<int, std::string>> trips_;
  std::map<std::string, std::string> vehicles_;
};

}  // namespace atomic::test
