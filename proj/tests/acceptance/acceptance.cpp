// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exits non-zero when any criterion fails.

#include <fnmatch.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "atomic/common/io.hpp"
#include "atomic/compose/fixture.hpp"
#include "atomic/compose/pipeline.hpp"
#include "atomic/estimator/service.hpp"
#include "atomic/fetcher/orchestrator.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi/codec.hpp"
#include "atomic/ngsi2gtfs/export.hpp"
#include "atomic/router/search.hpp"
#include "atomic/rt/bridge.hpp"
#include "atomic/rt/feed.hpp"
#include "generators.hpp"
#include "router_oracle.hpp"
#include "rt_oracle.hpp"
#include "test_util.hpp"

using namespace atomic;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  bool ok{false};
  std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

template <typename... Ts>
std::string cat(Ts const&... parts) {
  std::ostringstream out;
  (out << ... << parts);
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- NGSI to GTFS and back -------------------------------------------------

std::set<std::string> as_json_set(std::vector<mobility::TypedEntity> const& entities) {
  std::set<std::string> out;
  for (auto const& e : entities) {
    out.insert(ngsi::to_json(mobility::to_context(e)).dump());
  }
  return out;
}

Outcome export_round_trip() {
  std::mt19937 rng{1001};
  auto const t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) {
    auto const entities = test::random_static_set(rng);
    auto const back = ngsi2gtfs::feed_entities(gtfs::read_feed(gtfs::write_feed(ngsi2gtfs::build_feed(entities))));
    if (back.size() != entities.size() || as_json_set(back) != as_json_set(entities)) {
      return fail(cat("set ", i, " changed: ", entities.size(), " entities in, ", back.size(), " out"));
    }
  }
  auto const s = seconds_since(t0);
  if (s >= 10.0) {
    return fail(cat("100/100 equal but took ", s, " s"));
  }
  return pass(cat("100/100 sets equal in ", s, " s"));
}

// --- GTFS-realtime output --------------------------------------------------

ngsi::Notification carrying(mobility::TypedEntity const& e) { return {"sub", 0, {mobility::to_context(e)}}; }

Outcome realtime_conformance() {
  auto const empty = rt::encode(rt::FeedMessage{});
  transit_realtime::FeedMessage header_only;
  header_only.mutable_header()->set_gtfs_realtime_version("2.0");
  header_only.mutable_header()->set_incrementality(transit_realtime::FeedHeader::FULL_DATASET);
  if (empty != header_only.SerializeAsString()) {
    return fail("empty feed differs from the reference encoding");
  }
  if (empty.size() < 7 || empty.substr(0, 1) != "\x0a" || empty.substr(2, 5) != std::string{"\x0a\x03" "2.0"}) {
    return fail("empty feed does not open with the version header");
  }

  ServiceDate const day{2024, 3, 5};
  auto const fx = compose::gen_fixture(7, compose::FixtureSize::small);
  auto const schedule = rt::ScheduleIndex::build(ngsi2gtfs::build_feed(fx.entities), day);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (auto const& e : fx.entities) {
    if (auto const* st = std::get_if<mobility::StopTime>(&e)) {
      pairs.emplace_back(st->trip_ref, st->stop_ref);
    }
  }
  pairs.emplace_back("UNKNOWN", "S1");

  std::mt19937 rng{1002};
  std::size_t messages = 0;
  for (int round = 0; round < 1000; ++round) {
    rt::Bridge bridge{schedule};
    test::ReferenceReplay ref{fx, day};
    auto const n = 1 + static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) {
      if (rng() % 3 == 0) {
        auto const id = "V" + std::to_string(rng() % 4);
        auto const lat = 43.0 + (rng() % 100000) / 1e5;
        auto const lon = -3.9 + (rng() % 100000) / 1e5;
        std::optional<std::string> trip;
        if (rng() % 2 == 0) {
          trip = pairs[rng() % pairs.size()].first;
        }
        std::optional<double> bearing;
        if (rng() % 2 == 0) {
          bearing = (rng() % 3600) / 10.0;
        }
        bridge.on_notification(carrying(mobility::VehiclePosition{id, trip, {lat, lon}, bearing, {}}));
        ref.vehicle(id, trip, lat, lon, bearing);
      } else {
        auto const& [trip, stop] = pairs[rng() % pairs.size()];
        auto const est = day.midnight_epoch() + 5 * 3600 + static_cast<epoch_t>(rng() % (20 * 3600));
        bridge.on_notification(carrying(mobility::ArrivalEstimation{trip, stop, est, std::nullopt}));
        ref.estimation(trip, stop, est);
      }
    }
    auto const snap = bridge.snapshot();
    for (auto const* bytes : {&snap->trip_updates, &snap->vehicle_positions}) {
      auto const decoded = test::oracle_decode(*bytes);
      if (!decoded.ok) {
        return fail(cat("round ", round, ": ", decoded.problem));
      }
      auto const want = bytes == &snap->trip_updates ? ref.trip_view() : ref.vehicle_view();
      if (test::canonical_view(decoded.message) != want) {
        return fail(cat("round ", round, ": content differs from the reference replay"));
      }
      ++messages;
    }
  }
  return pass(cat(messages, "/", messages, " messages decode strictly and match; empty header bytes exact"));
}

// --- Routing ---------------------------------------------------------------

Outcome routing_oracle() {
  ServiceDate const day{2024, 3, 5};
  std::mt19937 rng{1003};
  auto const t0 = std::chrono::steady_clock::now();
  int found = 0;
  for (int n = 0; n < 500; ++n) {
    auto const f = test::random_network(rng, day);
    auto const [from, to] = test::random_query(rng, f);
    auto const after = day.midnight_epoch() + static_cast<epoch_t>(6 * 3600 + rng() % 1200);
    auto const got = router::earliest_arrival(router::build_graph(f, day), from, to, after);
    auto const trips = test::oracle_trips(f, day);
    auto const want = test::brute_force(trips, from, to, after);
    if (got.has_value() != want.has_value()) {
      return fail(cat("network ", n, ": router ", got ? "found" : "missed", " a journey the oracle ",
                      want ? "found" : "did not"));
    }
    if (got) {
      if (got->total_arrival != want->arrival) {
        return fail(cat("network ", n, ": arrival ", got->total_arrival, " vs ", want->arrival));
      }
      if (auto const problem = test::journey_problem(trips, *got, from, to, after); !problem.empty()) {
        return fail(cat("network ", n, ": ", problem));
      }
      ++found;
    }
  }
  auto const s = seconds_since(t0);
  if (s >= 30.0) {
    return fail(cat("500/500 agree but took ", s, " s"));
  }
  return pass(cat("500/500 agree (", found, " with a journey) in ", s, " s"));
}

// --- End to end ------------------------------------------------------------

Outcome end_to_end(compose::Mode mode) {
  ServiceDate const today{2024, 6, 3};
  test::TempDir dir;
  compose::PipelineConfig cfg;
  cfg.workdir = dir.path();
  cfg.today = today;
  cfg.fixture = compose::FixtureConfig{1, compose::FixtureSize::tiny};
  cfg.fetcher_poll = 200ms;
  cfg.realtime_poll = 50ms;
  cfg.binary = ATOMIC_TRANSIT_BIN;

  auto p = compose::start_pipeline(cfg, mode);
  auto const& probe = p->fixture()->probes.front();
  auto const depart = today.midnight_epoch() + probe.depart_after;
  auto const scheduled = today.midnight_epoch() + probe.expected_arrival;

  auto const before = p->route(probe.from_stop, probe.to_stop, depart);
  if (!before.value("found", false) || before.value("arrivalEpoch", epoch_t{0}) != scheduled) {
    return fail(cat("scheduled answer wrong: ", before.dump()));
  }
  p->broker().upsert(mobility::to_context(
      mobility::ArrivalEstimation{probe.trip_id, probe.to_stop, scheduled + 300, std::nullopt}));
  if (!p->wait_realtime(1, 10s)) {
    return fail("the delay never reached the router");
  }
  auto const after = p->route(probe.from_stop, probe.to_stop, depart);
  p->stop();
  auto const got = after.value("arrivalEpoch", epoch_t{0});
  if (got != scheduled + 300) {
    return fail(cat("arrival moved by ", got - scheduled, " s, not 300"));
  }
  return pass(cat(probe.from_stop, "->", probe.to_stop, " arrival moved by exactly 300 s"));
}

// --- Feed validity gate ----------------------------------------------------

class CountingPlugin final : public fetcher::RoutingEnginePlugin {
public:
  void load_feed(fetcher::FeedDelivery const&) override {
    std::lock_guard lock{mutex_};
    ++calls_;
  }
  int calls() const {
    std::lock_guard lock{mutex_};
    return calls_;
  }

private:
  mutable std::mutex mutex_;
  int calls_{0};
};

Outcome validity_gate() {
  auto const fx = compose::gen_fixture(1, compose::FixtureSize::tiny);
  test::TempDir dir;
  write_file_atomic(dir / "feed.zip", gtfs::write_feed(ngsi2gtfs::build_feed(fx.entities)));
  auto const until = ServiceDate::parse(fx.manifest()["validUntil"].get<std::string>());
  auto const broker = std::make_shared<ngsi::Broker>();
  ngsi::LocalBrokerClient client{broker};
  client.upsert(mobility::to_context(mobility::FeedPointer{
      "city", "file://" + (dir / "feed.zip").string(), "v1",
      ServiceDate::parse(fx.manifest()["validFrom"].get<std::string>()), until}));

  auto const polls = [&](ServiceDate today) {
    CountingPlugin plugin;
    fetcher::Orchestrator orch{client, plugin, {60000ms, today}};
    for (int i = 0; i < 3; ++i) {
      orch.poll_once();
    }
    return plugin.calls();
  };
  auto const expired_day = ServiceDate::from_days(until.days_since_epoch() + 1);
  auto const expired = polls(expired_day);
  // The same pointer inside its validity loads once, so the gate is what
  // keeps the plugin idle above.
  auto const valid = polls(ServiceDate::from_days(until.days_since_epoch()));
  if (expired != 0) {
    return fail(cat(expired, " plugin calls for a feed that expired ", until.str()));
  }
  if (valid != 1) {
    return fail(cat("control run inside validity made ", valid, " calls, expected 1"));
  }
  return pass(cat("0 plugin calls over 3 polls on ", expired_day.str(), " (control: 1 call on ", until.str(), ")"));
}

// --- Estimator -------------------------------------------------------------

constexpr epoch_t kHour = 3600;
constexpr epoch_t kT0 = 1'700'006'400;

double daily(epoch_t t) { return 0.5 + 0.4 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 86400.0); }

struct EstimatorBench {
  std::shared_ptr<std::atomic<epoch_t>> now = std::make_shared<std::atomic<epoch_t>>(kT0);
  Clock clock = [n = now] { return n->load(); };
  std::shared_ptr<ngsi::Broker> broker = std::make_shared<ngsi::Broker>(ngsi::BrokerOptions{std::nullopt, clock, {}});
  ngsi::LocalBrokerClient client{broker};

  void record(epoch_t t, double v) {
    ngsi::ContextEntity e{"urn:ngsi:TrafficFlowObserved:A", "TrafficFlowObserved", {}};
    e.set("occupancy", v, t);
    client.upsert(e);
  }

  estimator::EstimatorOptions options() const {
    estimator::EstimatorOptions o;
    o.clock = clock;
    return o;
  }
};

estimator::Target const kTarget{"urn:ngsi:TrafficFlowObserved:A", "occupancy", estimator::TargetKind::traffic};

/// 14 days of noisy hourly history, then 100 one-hour-ahead predictions,
/// each issued after the next observation arrives.
std::vector<std::pair<double, double>> predict_sinusoid() {
  EstimatorBench b;
  std::mt19937 rng{1006};
  auto const noisy = [&](epoch_t t) { return daily(t) + test::uniform(rng, -0.02, 0.02); };
  constexpr int kHistory = 14 * 24;
  for (int i = 0; i < kHistory; ++i) {
    b.record(kT0 + i * kHour, noisy(kT0 + i * kHour));
  }
  estimator::EstimatorService svc{b.client, {kTarget}, b.options()};
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < 100; ++k) {
    auto const now = kT0 + (kHistory - 1 + k) * kHour;
    if (k > 0) {
      b.record(now, noisy(now));
    }
    b.now->store(now);
    auto const p = svc.estimate(kTarget);
    out.emplace_back(p.predicted_value, daily(now + kHour));
  }
  return out;
}

Outcome estimator_accuracy() {
  auto const first = predict_sinusoid();
  auto const second = predict_sinusoid();
  double mae = 0;
  for (auto const& [predicted, truth] : first) {
    mae += std::abs(predicted - truth);
  }
  mae /= static_cast<double>(first.size());
  auto const identical = first.size() == second.size() &&
                         std::memcmp(first.data(), second.data(), first.size() * sizeof first[0]) == 0;
  if (!identical) {
    return fail("two runs on the same input differ");
  }
  if (mae > 0.06) {
    return fail(cat("MAE ", mae, " over 100 predictions exceeds 0.06"));
  }
  return pass(cat("MAE ", mae, " over 100 predictions; second run bit-identical"));
}

// --- Broker notifications --------------------------------------------------

struct SubSpec {
  std::string type;
  std::string id_pattern;
  std::set<std::string> watched;
  bool geo{false};
};

Outcome broker_notifications() {
  ngsi::GeoPoint const center{43.46, -3.81};
  ngsi::GeoPoint const near{43.461, -3.81};  // about 110 m away
  ngsi::GeoPoint const far{43.56, -3.81};    // about 11 km away
  constexpr double kRadius = 1000;

  std::vector<SubSpec> const specs = {
      {"", "", {}, false},
      {"Parking", "", {}, false},
      {"Traffic", "", {"a"}, false},
      {"", "urn:ngsi:Parking:*", {"b"}, false},
      {"", "*:1", {}, false},
      {"", "", {}, true},
      {"Parking", "", {"a", "location"}, true},
      {"", "urn:ngsi:*:?", {"location"}, false},
      {"Traffic", "*:3", {"a", "b"}, false},
      {"", "", {"never-set"}, false},
  };

  auto broker = std::make_shared<ngsi::Broker>();
  std::mutex mutex;
  std::vector<std::vector<int>> got(specs.size());
  for (auto i = 0U; i < specs.size(); ++i) {
    ngsi::Subscription s;
    s.entity_type = specs[i].type;
    s.id_pattern = specs[i].id_pattern;
    s.watched_attributes = specs[i].watched;
    if (specs[i].geo) {
      s.geo = ngsi::GeoFilter{center, kRadius};
    }
    s.target.sink = [&, i](ngsi::Notification const& n) {
      std::lock_guard lock{mutex};
      for (auto const& e : n.data) {
        got[i].push_back(static_cast<int>(e.number("n").value_or(-1)));
      }
    };
    broker->subscribe(std::move(s));
  }

  // Reference model: attribute values as JSON text, per entity.
  struct Known {
    std::string type;
    std::map<std::string, std::string> attrs;
  };
  std::map<std::string, Known> model;
  std::vector<std::vector<int>> want(specs.size());

  std::mt19937 rng{1007};
  for (int n = 0; n < 1000; ++n) {
    auto const parking = rng() % 2 == 0;
    auto const type = std::string{parking ? "Parking" : "Traffic"};
    auto const id = "urn:ngsi:" + type + ":" + std::to_string(1 + rng() % 4);
    ngsi::ContextEntity e{id, type, {}};
    e.set("n", static_cast<double>(n));
    auto const subset = 1 + rng() % 7;
    if (subset & 1) {
      e.set("a", static_cast<double>(rng() % 3));
    }
    if (subset & 2) {
      e.set("b", std::string{rng() % 2 == 0 ? "x" : "y"});
    }
    if (subset & 4) {
      e.set("location", rng() % 2 == 0 ? near : far);
    }

    auto& known = model[id];
    known.type = type;
    std::set<std::string> changed;
    for (auto const& [name, attr] : e.attributes) {
      auto const text = ngsi::to_json(ngsi::ContextEntity{id, type, {{name, attr}}}).dump();
      if (auto const it = known.attrs.find(name); it == end(known.attrs) || it->second != text) {
        changed.insert(name);
        known.attrs[name] = text;
      }
    }
    auto const loc = e.attributes.contains("location") ? e.geo("location") : std::optional<ngsi::GeoPoint>{};
    if (loc) {
      known.attrs["@near"] = *loc == near ? "1" : "0";
    }
    for (auto i = 0U; i < specs.size(); ++i) {
      auto const& s = specs[i];
      auto const in_scope = (s.type.empty() || s.type == type) &&
                            (s.id_pattern.empty() || fnmatch(s.id_pattern.c_str(), id.c_str(), 0) == 0) &&
                            (!s.geo || known.attrs["@near"] == "1");
      auto const watched = s.watched.empty() || std::any_of(begin(s.watched), end(s.watched),
                                                           [&](auto const& a) { return changed.contains(a); });
      if (in_scope && watched) {
        want[i].push_back(n);
      }
    }
    broker->upsert(e);
  }
  broker->flush();

  std::size_t total = 0;
  for (auto i = 0U; i < specs.size(); ++i) {
    total += want[i].size();
    if (got[i] != want[i]) {
      return fail(cat("subscription ", i, ": ", got[i].size(), " notifications, expected ", want[i].size(),
                      got[i].size() == want[i].size() ? " (order differs)" : ""));
    }
  }
  if (broker->stats().notifications_delivered != total) {
    return fail(cat("broker counted ", broker->stats().notifications_delivered, " deliveries, expected ", total));
  }
  if (want.back().size() != 0 || want.front().size() != 1000) {
    return fail("the reference model itself is off");
  }
  return pass(cat(total, " notifications over 10 subscriptions, counts and order exact"));
}

// --- Estimator cache -------------------------------------------------------

Outcome cache_semantics() {
  EstimatorBench b;
  auto now = kT0 + 20 * 86400;
  auto recorded = now - 14 * 24 * kHour;
  auto const record_until = [&](epoch_t t) {
    while (recorded + kHour <= t) {
      recorded += kHour;
      b.record(recorded, 100 * daily(recorded));
    }
  };
  record_until(now);
  b.now->store(now);
  estimator::EstimatorService svc{b.client, {kTarget}, b.options()};
  auto const cache_id = estimator::prediction_entity_id(kTarget.entity_id, kTarget.attr);

  std::optional<estimator::Prediction> persisted;  // what the cache must hold
  std::mt19937 rng{1008};
  int serves = 0, from_cache = 0, recomputed = 0, stale_fallbacks = 0;
  for (int cycle = 0; cycle < 200; ++cycle) {
    now += static_cast<epoch_t>(rng() % 9) * 900;
    b.now->store(now);
    b.client.set_available(true);
    record_until(now);
    auto const up = rng() % 10 != 0;
    b.client.set_available(up);

    if (rng() % 5 < 2) {
      auto const done = svc.run_cycle();
      if (done != (up ? 1U : 0U)) {
        return fail(cat("cycle ", cycle, ": ", done, " predictions persisted with the broker ", up ? "up" : "down"));
      }
      if (up) {
        auto const stored = estimator::prediction_from_context(*b.client.get(cache_id));
        if (stored.issued_at != now) {
          return fail(cat("cycle ", cycle, ": cache entity not refreshed"));
        }
        persisted = stored;
      }
      continue;
    }

    ++serves;
    auto const fresh = persisted && now - persisted->issued_at <= kHour;
    auto const expect_recompute = up && !fresh;
    estimator::Served s;
    try {
      s = svc.serve(kTarget.entity_id, kTarget.attr);
    } catch (estimator::Unavailable const&) {
      if (persisted) {
        return fail(cat("cycle ", cycle, ": unavailable although a prediction was persisted"));
      }
      continue;
    }
    if (s.recomputed != expect_recompute) {
      return fail(cat("cycle ", cycle, ": recomputed=", s.recomputed, " with broker ", up ? "up" : "down",
                      " and a ", fresh ? "fresh" : "stale or missing", " cache"));
    }
    if (s.recomputed) {
      ++recomputed;
      if (s.prediction.issued_at != now) {
        return fail(cat("cycle ", cycle, ": recomputed value issued at ", s.prediction.issued_at));
      }
      auto const stored = estimator::prediction_from_context(*b.client.get(cache_id));
      if (!(stored == s.prediction)) {
        return fail(cat("cycle ", cycle, ": recomputed value was not persisted"));
      }
      persisted = stored;
    } else {
      ++from_cache;
      stale_fallbacks += fresh ? 0 : 1;
      if (!persisted || !(s.prediction == *persisted)) {
        return fail(cat("cycle ", cycle, ": served a value that is not the last persisted one"));
      }
    }
  }
  b.client.set_available(true);

  // The event log must tell the same story: every served value is the last
  // persisted one, and each recompute is a predict followed by its persist.
  std::optional<nlohmann::json> last_predict, last_persist;
  for (auto const& r : svc.log().records()) {
    if (r.kind == estimator::EventKind::predict) {
      last_predict = r.detail;
    } else if (r.kind == estimator::EventKind::persist) {
      last_persist = r.detail;
    } else if (r.kind == estimator::EventKind::serve) {
      auto const same = [&](std::optional<nlohmann::json> const& e) {
        return e && (*e)["value"] == r.detail["value"] && (*e)["issuedAt"] == r.detail["issuedAt"];
      };
      if (!same(last_persist)) {
        return fail("a serve event does not match the preceding persist event");
      }
      if (r.detail["source"] == "recomputed" && (!same(last_predict) || r.detail["issuedAt"] != r.epoch)) {
        return fail("a recomputed serve event has no matching fresh predict event");
      }
    }
  }
  if (recomputed == 0 || from_cache == 0 || stale_fallbacks == 0) {
    return fail(cat("run did not exercise every path: ", from_cache, " cached, ", recomputed, " recomputed, ",
                    stale_fallbacks, " stale fallbacks"));
  }
  return pass(cat(serves, " serves: ", from_cache, " from cache (", stale_fallbacks, " stale while the broker was down), ",
                  recomputed, " recomputed; event log consistent"));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria = {
      {"ngsi-gtfs-round-trip", export_round_trip},
      {"gtfs-rt-conformance", realtime_conformance},
      {"routing-matches-brute-force", routing_oracle},
      {"end-to-end-delay-inproc", [] { return end_to_end(compose::Mode::inproc); }},
      {"end-to-end-delay-multiproc", [] { return end_to_end(compose::Mode::multiproc); }},
      {"expired-feed-never-loaded", validity_gate},
      {"estimator-accuracy", estimator_accuracy},
      {"broker-notification-exactness", broker_notifications},
      {"estimator-cache-semantics", cache_semantics},
  };
  auto failed = 0;
  for (auto const& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (std::exception const& e) {
      o = fail(cat("threw: ", e.what()));
    }
    failed += o.ok ? 0 : 1;
    std::cout << (o.ok ? "PASS  " : "FAIL  ") << name << "  " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
