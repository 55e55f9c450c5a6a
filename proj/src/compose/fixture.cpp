#include "atomic/compose/fixture.hpp"

#include <map>
#include <random>
#include <stdexcept>

#include "atomic/ngsi/codec.hpp"

namespace atomic::compose {

using namespace atomic::mobility;

FixtureSize parse_fixture_size(std::string_view s) {
  if (s == "tiny") {
    return FixtureSize::tiny;
  }
  if (s == "small") {
    return FixtureSize::small;
  }
  throw std::invalid_argument{"fixture size must be tiny or small, got '" + std::string{s} + "'"};
}

std::string_view to_string(FixtureSize s) { return s == FixtureSize::tiny ? "tiny" : "small"; }

namespace {

ServiceDate const kFirstDay{2020, 1, 1};
ServiceDate const kLastDay{2035, 12, 31};

class Builder {
public:
  Builder(std::uint32_t seed, FixtureSize size) : rng_{seed} {
    fx_.seed = seed;
    fx_.size = size;
  }

  /// Integer in [lo, hi].
  int pick(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint32_t>(hi - lo + 1)); }

  /// Offset in [-span, span] with 1e-5 degree resolution.
  double jitter(double span) {
    auto const steps = static_cast<int>(span * 1e5);
    return pick(-steps, steps) / 1e5;
  }

  void agency(std::string const& id, std::string const& name) {
    add(Agency{id, name, "https://" + id + ".transit.example.org", "Europe/Madrid"});
  }

  void stop(std::string const& id, std::string const& name, double lat, double lon) {
    add(Stop{id, name, GeoPoint{lat + jitter(0.002), lon + jitter(0.002)}});
  }

  void add_route(std::string const& id, std::string const& agency, std::string const& short_name) {
    add(Route{id, agency, short_name, 3});
  }

  void daily_service(std::string const& id) {
    Service s{id, {}, kFirstDay, kLastDay};
    s.weekdays.fill(true);
    add(s);
  }

  /// Adds a trip visiting `stops` and returns its times.
  std::vector<ScheduledTime> trip(std::string const& trip_id, std::string const& route, std::string const& service,
                                  std::vector<std::string> const& stops, int first_departure) {
    add(Trip{trip_id, route, service, "to " + stops.back()});
    std::vector<ScheduledTime> times;
    auto t = first_departure;
    for (auto i = 0U; i < stops.size(); ++i) {
      auto const arrival = t;
      auto const departure = i == 0 || i + 1 == stops.size() ? arrival : arrival + pick(0, 2) * 30;
      auto const seq = static_cast<int>(i + 1);
      add(StopTime{trip_id, stops[i], seq, arrival, departure});
      times.push_back(ScheduledTime{trip_id, stops[i], seq, arrival, departure});
      t = departure + pick(5, 10) * 60;
    }
    fx_.samples.push_back(times.front());
    fx_.samples.push_back(times.back());
    return times;
  }

  void parking(std::string const& id, double lat, double lon) {
    auto const total = pick(5, 40) * 10;
    add(ParkingSpotGroup{id, GeoPoint{lat + jitter(0.002), lon + jitter(0.002)}, total, pick(0, total), std::nullopt});
  }

  void traffic(std::string const& id, double lat, double lon) {
    add(TrafficFlowObserved{id, GeoPoint{lat + jitter(0.002), lon + jitter(0.002)}, pick(100, 1500) * 1.0,
                            std::nullopt});
  }

  void probe(Probe p) { fx_.probes.push_back(std::move(p)); }

  Fixture finish() { return std::move(fx_); }

private:
  void add(TypedEntity e) { fx_.entities.push_back(std::move(e)); }

  std::mt19937 rng_;
  Fixture fx_;
};

constexpr double kLat = 43.462;
constexpr double kLon = -3.810;

void build_tiny(Builder& b) {
  b.agency("AG1", "Desk City Transit");
  b.stop("S1", "Plaza Mayor", kLat, kLon);
  b.stop("S2", "Mercado", kLat + 0.006, kLon + 0.004);
  b.stop("S3", "Puerto", kLat + 0.011, kLon + 0.010);
  b.stop("S4", "Universidad", kLat + 0.002, kLon + 0.015);
  b.add_route("R1", "AG1", "1");
  b.add_route("R2", "AG1", "2");
  b.daily_service("DAILY");

  auto const start = 8 * 3600 + b.pick(0, 29) * 60;
  auto const t1 = b.trip("T1", "R1", "DAILY", {"S1", "S2", "S3"}, start);
  b.trip("T2", "R1", "DAILY", {"S1", "S2", "S3"}, start + 3600);
  // Leaves S2 long enough after T1 arrives there for a transfer.
  auto const t3 = b.trip("T3", "R2", "DAILY", {"S2", "S4"}, t1[1].arrival + b.pick(5, 15) * 60);

  b.probe(Probe{"S1", "S3", start - 60, "T1", t1[2].arrival, 1});
  b.probe(Probe{"S1", "S4", start - 60, "T3", t3[1].arrival, 2});
  b.parking("P1", kLat + 0.001, kLon - 0.001);
}

void build_small(Builder& b) {
  b.agency("AG1", "North Lines");
  b.agency("AG2", "South Lines");
  for (int i = 0; i < 20; ++i) {
    auto const id = "S" + std::to_string(i + 1);
    b.stop(id, "Stop " + std::to_string(i + 1), kLat + 0.004 * (i % 5), kLon + 0.005 * (i / 5));
  }
  b.daily_service("DAILY");
  b.daily_service("EXTRA");

  // Route r visits five stops starting at 3r, so consecutive routes share a stop.
  std::vector<std::vector<ScheduledTime>> first_trips;
  for (int r = 0; r < 6; ++r) {
    auto const route = "R" + std::to_string(r + 1);
    b.add_route(route, r < 3 ? "AG1" : "AG2", std::to_string(r + 1));
    std::vector<std::string> stops;
    for (int k = 0; k < 5; ++k) {
      stops.push_back("S" + std::to_string((3 * r + k) % 20 + 1));
    }
    auto const base = 6 * 3600 + r * 600 + b.pick(0, 9) * 60;
    for (int k = 0; k < 5; ++k) {
      auto const trip_id = route + "-T" + std::to_string(k + 1);
      auto times = b.trip(trip_id, route, k % 2 == 0 ? "DAILY" : "EXTRA", stops, base + k * 3600);
      if (k == 0) {
        first_trips.push_back(std::move(times));
      }
    }
  }
  // Each first trip is the only way to ride its route before the second
  // trip leaves an hour later.
  for (auto const& t : first_trips) {
    b.probe(Probe{t.front().stop_id, t[3].stop_id, t.front().departure - 60, t.front().trip_id, t[3].arrival, 1});
  }
  b.parking("P1", kLat, kLon);
  b.parking("P2", kLat + 0.010, kLon + 0.010);
  b.parking("P3", kLat + 0.015, kLon - 0.005);
  b.traffic("SEG1", kLat + 0.003, kLon + 0.002);
  b.traffic("SEG2", kLat + 0.008, kLon + 0.012);
}

}  // namespace

nlohmann::json Fixture::entities_json() const {
  auto out = nlohmann::json::array();
  for (auto const& e : entities) {
    out.push_back(ngsi::to_json(to_context(e)));
  }
  return out;
}

nlohmann::json Fixture::manifest() const {
  std::map<std::string, std::size_t> counts;
  for (auto const& e : entities) {
    ++counts[kTypeNames[e.index()]];
  }
  auto probes_json = nlohmann::json::array();
  for (auto const& p : probes) {
    probes_json.push_back({{"from", p.from_stop},
                           {"to", p.to_stop},
                           {"departAfter", p.depart_after},
                           {"tripId", p.trip_id},
                           {"expectedArrival", p.expected_arrival},
                           {"legs", p.legs}});
  }
  auto samples_json = nlohmann::json::array();
  for (auto const& s : samples) {
    samples_json.push_back({{"tripId", s.trip_id},
                            {"stopId", s.stop_id},
                            {"stopSequence", s.stop_sequence},
                            {"arrival", s.arrival},
                            {"departure", s.departure}});
  }
  return {{"seed", seed},
          {"size", to_string(size)},
          {"counts", counts},
          {"validFrom", kFirstDay.str()},
          {"validUntil", kLastDay.str()},
          {"probes", probes_json},
          {"samples", samples_json}};
}

Fixture gen_fixture(std::uint32_t seed, FixtureSize size) {
  Builder b{seed, size};
  if (size == FixtureSize::tiny) {
    build_tiny(b);
  } else {
    build_small(b);
  }
  return b.finish();
}

}  // namespace atomic::compose
