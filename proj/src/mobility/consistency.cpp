#include "atomic/mobility/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace atomic::mobility {

std::string_view to_string(Finding::Kind k) {
  switch (k) {
    case Finding::Kind::dangling_reference: return "dangling-reference";
    case Finding::Kind::invariant_violation: return "invariant-violation";
    case Finding::Kind::duplicate_id: return "duplicate-id";
    case Finding::Kind::conversion_failure: return "conversion-failure";
  }
  return "?";
}

std::size_t ConsistencyReport::count(Finding::Kind k) const {
  return static_cast<std::size_t>(
      std::count_if(begin(findings), end(findings), [&](Finding const& f) { return f.kind == k; }));
}

std::string ConsistencyReport::summary() const {
  std::ostringstream out;
  for (auto const& f : findings) {
    out << to_string(f.kind) << ' ' << f.entity_id << ": " << f.detail << '\n';
  }
  return out.str();
}

namespace {

class Checker {
public:
  void add(TypedEntity const& e) {
    auto const id = entity_id(e);
    // A repeated (trip, sequence) pair is reported by the sequence rule.
    if (!std::holds_alternative<StopTime>(e) && !seen_.insert({e.index(), id}).second) {
      report(Finding::Kind::duplicate_id, id, "duplicate business id");
      return;
    }
    std::visit([&](auto const& x) { index(x); }, e);
    entities_.push_back(e);
  }

  void conversion_failure(std::string const& id, std::string const& what) {
    report(Finding::Kind::conversion_failure, id, what);
  }

  ConsistencyReport finish() {
    for (auto const& e : entities_) {
      std::visit([&](auto const& x) { check(x, entity_id(e)); }, e);
    }
    check_trip_sequences();
    return std::move(out_);
  }

private:
  void report(Finding::Kind k, std::string const& id, std::string detail) {
    out_.findings.push_back(Finding{k, id, std::move(detail)});
  }

  void invariant(bool ok, std::string const& id, std::string const& what) {
    if (!ok) {
      report(Finding::Kind::invariant_violation, id, what);
    }
  }

  void ref(std::set<std::string> const& targets, std::string const& key, std::string const& id,
           std::string const& field) {
    if (!targets.contains(key)) {
      report(Finding::Kind::dangling_reference, id, field + " '" + key + "' does not resolve");
    }
  }

  void index(Agency const& a) { agencies_.insert(a.agency_id); }
  void index(Stop const& s) { stops_.insert(s.stop_id); }
  void index(Route const& r) { routes_.insert(r.route_id); }
  void index(Service const& s) { services_.insert(s.service_id); }
  void index(Trip const& t) { trips_.insert(t.trip_id); }
  void index(StopTime const& st) { by_trip_[st.trip_ref].push_back(st); }
  template <typename T>
  void index(T const&) {}

  void check(Agency const& a, std::string const& id) { invariant(!a.agency_id.empty(), id, "agencyId is empty"); }

  void check(Stop const& s, std::string const& id) {
    invariant(!s.stop_id.empty(), id, "stopId is empty");
    invariant(s.location.valid(), id, "location is not a valid geo-point");
  }

  void check(Route const& r, std::string const& id) {
    invariant(!r.route_id.empty(), id, "routeId is empty");
    invariant(r.route_type >= 0, id, "routeType is negative");
    ref(agencies_, r.agency_ref, id, "agencyRef");
  }

  void check(Service const& s, std::string const& id) {
    invariant(!s.service_id.empty(), id, "serviceId is empty");
    invariant(s.start_date <= s.end_date, id, "startDate after endDate");
  }

  void check(Trip const& t, std::string const& id) {
    invariant(!t.trip_id.empty(), id, "tripId is empty");
    ref(routes_, t.route_ref, id, "routeRef");
    ref(services_, t.service_ref, id, "serviceRef");
  }

  void check(StopTime const& st, std::string const& id) {
    invariant(st.stop_sequence >= 0, id, "stopSequence is negative");
    invariant(st.arrival_time >= 0, id, "arrivalTime is negative");
    invariant(st.departure_time >= st.arrival_time, id, "departureTime before arrivalTime");
    ref(trips_, st.trip_ref, id, "tripRef");
    ref(stops_, st.stop_ref, id, "stopRef");
  }

  void check(ArrivalEstimation const& a, std::string const& id) {
    invariant(a.estimated_arrival > 0, id, "estimatedArrivalTime must be positive");
    ref(trips_, a.trip_ref, id, "tripRef");
    ref(stops_, a.stop_ref, id, "stopRef");
  }

  void check(VehiclePosition const& v, std::string const& id) {
    invariant(!v.vehicle_id.empty(), id, "vehicleId is empty");
    invariant(v.location.valid(), id, "location is not a valid geo-point");
    invariant(!v.bearing || (*v.bearing >= 0.0 && *v.bearing < 360.0), id, "bearing outside [0,360)");
    if (v.trip_ref) {
      ref(trips_, *v.trip_ref, id, "tripRef");
    }
  }

  void check(FeedPointer const& p, std::string const& id) {
    invariant(!p.feed_id.empty(), id, "feedId is empty");
    invariant(!p.source_url.empty(), id, "sourceUrl is empty");
    invariant(p.valid_from <= p.valid_until, id, "validFrom after validUntil");
  }

  void check(ParkingSpotGroup const& p, std::string const& id) {
    invariant(p.location.valid(), id, "location is not a valid geo-point");
    invariant(p.total_spots > 0, id, "totalSpots must be positive");
    invariant(p.available_spots >= 0 && p.available_spots <= p.total_spots, id,
              "availableSpots outside [0,totalSpots]");
  }

  void check(TrafficFlowObserved const& t, std::string const& id) {
    invariant(t.location.valid(), id, "location is not a valid geo-point");
    invariant(std::isfinite(t.intensity) && t.intensity >= 0.0, id, "intensity must be finite and >= 0");
  }

  void check_trip_sequences() {
    for (auto& [trip, times] : by_trip_) {
      std::stable_sort(begin(times), end(times),
                       [](StopTime const& a, StopTime const& b) { return a.stop_sequence < b.stop_sequence; });
      for (auto i = 1U; i < times.size(); ++i) {
        auto const& prev = times[i - 1];
        auto const& cur = times[i];
        auto const id = entity_id(cur);
        if (cur.stop_sequence <= prev.stop_sequence) {
          report(Finding::Kind::invariant_violation, id,
                 "stopSequence " + std::to_string(cur.stop_sequence) + " does not increase along trip " + trip);
        } else if (cur.arrival_time < prev.departure_time) {
          report(Finding::Kind::invariant_violation, id, "arrival before previous departure along trip " + trip);
        }
      }
    }
  }

  std::set<std::pair<std::size_t, std::string>> seen_;
  std::vector<TypedEntity> entities_;
  std::set<std::string> agencies_, stops_, routes_, services_, trips_;
  std::map<std::string, std::vector<StopTime>> by_trip_;
  ConsistencyReport out_;
};

}  // namespace

ConsistencyReport validate_consistency(std::vector<TypedEntity> const& entities) {
  Checker c;
  for (auto const& e : entities) {
    c.add(e);
  }
  return c.finish();
}

ConsistencyReport validate_consistency(std::vector<ngsi::ContextEntity> const& entities) {
  Checker c;
  for (auto const& e : entities) {
    if (!is_model_type(e.type)) {
      continue;
    }
    try {
      c.add(from_context(e));
    } catch (ModelError const& err) {
      c.conversion_failure(e.id, err.what());
    }
  }
  return c.finish();
}

}  // namespace atomic::mobility
