#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "atomic/common/http_client.hpp"
#include "atomic/common/io.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi2gtfs/export.hpp"
#include "atomic/rt/bridge.hpp"
#include "atomic/rt/http_api.hpp"
#include "atomic/rt/wire.hpp"
#include "rt_oracle.hpp"
#include "test_util.hpp"

using namespace atomic;
using namespace atomic::rt;

namespace {

ServiceDate const kDay{2024, 3, 5};

compose::Fixture tiny() { return compose::gen_fixture(1, compose::FixtureSize::tiny); }

gtfs::GtfsFeed feed_of(compose::Fixture const& fx) { return ngsi2gtfs::build_feed(fx.entities); }

std::string hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto const c : bytes) {
    auto const b = static_cast<unsigned char>(c);
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

int scheduled(compose::Fixture const& fx, std::string const& trip, std::string const& stop) {
  for (auto const& e : fx.entities) {
    if (auto const* st = std::get_if<mobility::StopTime>(&e); st && st->trip_ref == trip && st->stop_ref == stop) {
      return st->arrival_time;
    }
  }
  throw std::logic_error{"no such stop time"};
}

ngsi::Notification estimation(std::string const& trip, std::string const& stop, epoch_t est,
                              std::optional<epoch_t> observed = std::nullopt) {
  return {"sub", 0, {mobility::to_context(mobility::ArrivalEstimation{trip, stop, est, observed})}};
}

struct FakeClock {
  std::atomic<epoch_t> now{kDay.midnight_epoch() + 8 * 3600};
  Clock clock() {
    return [this] { return now.load(); };
  }
};

/// Fails the n-th subscribe call, counting from 1.
class FlakyClient final : public ngsi::BrokerClient {
public:
  FlakyClient(ngsi::BrokerClient& inner, int fail_at) : inner_{inner}, fail_at_{fail_at} {}
  ngsi::UpsertResult upsert(ngsi::ContextEntity const& e) override { return inner_.upsert(e); }
  std::optional<ngsi::ContextEntity> get(std::string const& id) override { return inner_.get(id); }
  std::vector<ngsi::ContextEntity> query(ngsi::EntityQuery const& q) override { return inner_.query(q); }
  std::string subscribe(ngsi::Subscription const& s) override {
    if (++calls_ == fail_at_) {
      throw ngsi::BrokerError{ngsi::Errc::unavailable, "injected"};
    }
    return inner_.subscribe(s);
  }
  void unsubscribe(std::string const& id) override { inner_.unsubscribe(id); }
  std::vector<ngsi::Subscription> subscriptions() override { return inner_.subscriptions(); }
  std::vector<ngsi::HistoricalRecord> history(std::string const& id, std::string const& a, epoch_t f,
                                              epoch_t t) override {
    return inner_.history(id, a, f, t);
  }
  bool ping() override { return inner_.ping(); }

private:
  ngsi::BrokerClient& inner_;
  int fail_at_;
  int calls_{0};
};

}  // namespace

TEST(Wire, VarintsByHand) {
  pb::Writer w;
  w.varint(0);
  w.varint(1);
  w.varint(127);
  w.varint(128);
  w.varint(300);
  EXPECT_EQ(hex(w.bytes()), "00017f8001ac02");

  pb::Writer neg;
  neg.int32_field(1, -1);
  EXPECT_EQ(hex(neg.bytes()), "08ffffffffffffffffff01");

  pb::Writer fl;
  fl.float_field(1, 1.0F);
  EXPECT_EQ(hex(fl.bytes()), "0d0000803f");

  pb::Reader r{neg.bytes()};
  ASSERT_TRUE(r.next());
  EXPECT_EQ(r.field(), 1U);
  EXPECT_EQ(r.read_int32(), -1);
  EXPECT_FALSE(r.next());
}

TEST(Wire, TruncationRejected) {
  pb::Writer w;
  w.bytes_field(2, "hello");
  auto const cut = w.bytes().substr(0, 4);
  pb::Reader r{cut};
  ASSERT_TRUE(r.next());
  EXPECT_THROW(r.read_bytes(), pb::DecodeError);
  EXPECT_THROW(decode("\x0a\x05\x0a"), pb::DecodeError);
  EXPECT_THROW(decode(""), pb::DecodeError);  // no header
}

TEST(Feed, EmptyFeedHeaderBytes) {
  FeedMessage m;
  // header (field 1, len 7) { version (field 1, len 3) "2.0", incrementality (field 2) 0 }
  EXPECT_EQ(hex(encode(m)), "0a070a03322e301000");
  m.timestamp = 1;
  auto const bytes = encode(m);
  EXPECT_EQ(hex(bytes), "0a090a03322e3010001801");
  auto const o = test::oracle_decode(bytes);
  ASSERT_TRUE(o.ok) << o.problem;
  EXPECT_EQ(o.message.header().gtfs_realtime_version(), "2.0");
  EXPECT_EQ(o.message.header().incrementality(), transit_realtime::FeedHeader::FULL_DATASET);
  EXPECT_EQ(o.message.entity_size(), 0);
}

TEST(Feed, OwnDecoderRoundTrip) {
  FeedMessage m;
  m.timestamp = 1710000000;
  m.entities.push_back(FeedEntity{"trip:T1", TripUpdate{"T1", {{1, "S1", -45, 1710000100}, {2, "S2", 0, {}}}, 7}});
  m.entities.push_back(FeedEntity{"vehicle:B1", VehiclePosition{"T1", "B1", 43.5F, -3.8F, 90.0F, 8}});
  m.entities.push_back(FeedEntity{"vehicle:B2", VehiclePosition{{}, "B2", 1.0F, 2.0F, {}, {}}});
  auto const bytes = encode(m);
  EXPECT_EQ(decode(bytes), m);
  auto const o = test::oracle_decode(bytes);
  ASSERT_TRUE(o.ok) << o.problem;
  EXPECT_EQ(o.message.entity(0).trip_update().stop_time_update(0).arrival().delay(), -45);
  EXPECT_TRUE(o.message.entity(0).trip_update().stop_time_update(1).arrival().has_delay());
  EXPECT_EQ(o.message.entity(1).vehicle().position().bearing(), 90.0F);
}

TEST(Feed, DecoderSkipsUnknownFields) {
  transit_realtime::FeedMessage m;
  m.mutable_header()->set_gtfs_realtime_version("2.0");
  auto* e = m.add_entity();
  e->set_id("x");
  e->set_is_deleted(false);
  auto* tu = e->mutable_trip_update();
  tu->mutable_trip()->set_trip_id("T9");
  tu->mutable_trip()->set_route_id("R9");
  tu->set_delay(12);
  auto* u = tu->add_stop_time_update();
  u->set_stop_id("S");
  u->mutable_departure()->set_delay(3);
  auto const decoded = decode(m.SerializeAsString());
  ASSERT_EQ(decoded.entities.size(), 1U);
  auto const& t = std::get<TripUpdate>(decoded.entities[0].payload);
  EXPECT_EQ(t.trip_id, "T9");
  ASSERT_EQ(t.stop_time_updates.size(), 1U);
  EXPECT_FALSE(t.stop_time_updates[0].arrival_delay);
}

TEST(Schedule, IndexesActiveDay) {
  auto const fx = tiny();
  auto const idx = ScheduleIndex::build(feed_of(fx), kDay);
  EXPECT_EQ(idx.size(), 8U);
  auto const e = idx.find("T1", "S3");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->arrival, kDay.midnight_epoch() + scheduled(fx, "T1", "S3"));
  EXPECT_EQ(e->stop_sequence, 3);
  EXPECT_FALSE(idx.find("T1", "S4"));
  EXPECT_THROW(ScheduleIndex::build(feed_of(fx), ServiceDate{2040, 1, 1}), ScheduleError);
}

TEST(Schedule, SkipsServicesNotRunning) {
  auto feed = feed_of(tiny());
  feed.services[0].weekdays = {};
  feed.services[0].weekdays[kDay.weekday_index()] = false;
  EXPECT_TRUE(ScheduleIndex::build(feed, kDay).empty());
}

TEST(Bridge, StartSubscribesAndServesEmptyFeed) {
  auto const fx = tiny();
  auto broker = std::make_shared<ngsi::Broker>();
  ngsi::LocalBrokerClient client{broker};
  Bridge bridge{ScheduleIndex::build(feed_of(fx), kDay)};
  bridge.start(client);
  EXPECT_EQ(client.subscriptions().size(), 2U);

  auto const snap = bridge.snapshot();
  auto const o = test::oracle_decode(snap->trip_updates);
  ASSERT_TRUE(o.ok) << o.problem;
  EXPECT_EQ(o.message.entity_size(), 0);
  EXPECT_EQ(o.message.header().gtfs_realtime_version(), "2.0");

  bridge.stop();
  EXPECT_TRUE(client.subscriptions().empty());
}

TEST(Bridge, StartFailureLeavesNoSubscriptions) {
  auto broker = std::make_shared<ngsi::Broker>();
  ngsi::LocalBrokerClient client{broker};
  Bridge bridge{ScheduleIndex::build(feed_of(tiny()), kDay)};

  client.set_available(false);
  EXPECT_THROW(bridge.start(client), ngsi::BrokerError);
  client.set_available(true);
  EXPECT_TRUE(client.subscriptions().empty());

  FlakyClient flaky{client, 2};
  EXPECT_THROW(bridge.start(flaky), ngsi::BrokerError);
  EXPECT_TRUE(client.subscriptions().empty());
  EXPECT_TRUE(bridge.subscription_ids().empty());
}

TEST(Bridge, DelayFromScheduleAndUpsert) {
  auto const fx = tiny();
  Bridge bridge{ScheduleIndex::build(feed_of(fx), kDay)};
  auto const e = kDay.midnight_epoch() + scheduled(fx, "T1", "S2");

  bridge.on_notification(estimation("T1", "S2", e + 300));
  auto o = test::oracle_decode(bridge.snapshot()->trip_updates);
  ASSERT_TRUE(o.ok) << o.problem;
  ASSERT_EQ(o.message.entity_size(), 1);
  auto const& tu = o.message.entity(0).trip_update();
  EXPECT_EQ(tu.trip().trip_id(), "T1");
  ASSERT_EQ(tu.stop_time_update_size(), 1);
  EXPECT_EQ(tu.stop_time_update(0).arrival().delay(), 300);
  EXPECT_EQ(tu.stop_time_update(0).stop_id(), "S2");

  bridge.on_notification(estimation("T1", "S2", e + 120));
  o = test::oracle_decode(bridge.snapshot()->trip_updates);
  ASSERT_TRUE(o.ok) << o.problem;
  ASSERT_EQ(o.message.entity(0).trip_update().stop_time_update_size(), 1);
  EXPECT_EQ(o.message.entity(0).trip_update().stop_time_update(0).arrival().delay(), 120);

  // Early arrivals give negative delays.
  bridge.on_notification(estimation("T1", "S2", e - 90));
  o = test::oracle_decode(bridge.snapshot()->trip_updates);
  EXPECT_EQ(o.message.entity(0).trip_update().stop_time_update(0).arrival().delay(), -90);
}

TEST(Bridge, UnknownTripIsSkipped) {
  Bridge bridge{ScheduleIndex::build(feed_of(tiny()), kDay)};
  auto const before = bridge.snapshot()->feed.entities;
  bridge.on_notification(estimation("T404", "S1", kDay.midnight_epoch() + 9 * 3600));
  auto const snap = bridge.snapshot();
  EXPECT_EQ(snap->feed.entities, before);
  EXPECT_EQ(snap->metrics.skipped, 1U);
  EXPECT_EQ(snap->metrics.notifications_applied, 1U);
}

TEST(Bridge, MalformedEntitiesAreDropped) {
  Bridge bridge{ScheduleIndex::build(feed_of(tiny()), kDay)};
  ngsi::ContextEntity bad{"urn:ngsi:ArrivalEstimation:x", "ArrivalEstimation", {}};
  bad.set("tripRef", std::string{"T1"});
  ngsi::ContextEntity other{"urn:x", "Banana", {}};
  bridge.on_notification({"sub", 0, {bad, other}});
  auto const snap = bridge.snapshot();
  EXPECT_EQ(snap->metrics.malformed, 2U);
  EXPECT_TRUE(snap->feed.entities.empty());
}

TEST(Bridge, VehiclePositions) {
  Bridge bridge{ScheduleIndex::build(feed_of(tiny()), kDay)};
  mobility::VehiclePosition v{"B7", "T1", {43.47, -3.80}, 180.5, 1710000000};
  bridge.on_notification({"sub", 0, {mobility::to_context(v)}});
  auto const o = test::oracle_decode(bridge.snapshot()->vehicle_positions);
  ASSERT_TRUE(o.ok) << o.problem;
  ASSERT_EQ(o.message.entity_size(), 1);
  auto const& vp = o.message.entity(0).vehicle();
  EXPECT_EQ(o.message.entity(0).id(), "vehicle:B7");
  EXPECT_EQ(vp.vehicle().id(), "B7");
  EXPECT_EQ(vp.trip().trip_id(), "T1");
  EXPECT_EQ(vp.position().latitude(), 43.47F);
  EXPECT_EQ(vp.position().bearing(), 180.5F);
  EXPECT_EQ(vp.timestamp(), 1710000000U);
  EXPECT_EQ(test::oracle_decode(bridge.snapshot()->trip_updates).message.entity_size(), 0);
}

TEST(Bridge, StaleEntriesEvicted) {
  auto const fx = tiny();
  FakeClock clock;
  BridgeOptions opts;
  opts.horizon_seconds = 600;
  opts.clock = clock.clock();
  Bridge bridge{ScheduleIndex::build(feed_of(fx), kDay), opts};

  bridge.on_notification(estimation("T1", "S2", kDay.midnight_epoch() + scheduled(fx, "T1", "S2") + 60));
  clock.now += 1200;
  bridge.rebuild();
  EXPECT_EQ(bridge.snapshot()->feed.entities.size(), 1U);
  clock.now += 1;
  bridge.rebuild();
  EXPECT_TRUE(bridge.snapshot()->feed.entities.empty());
  EXPECT_EQ(bridge.snapshot()->metrics.evicted, 1U);
  EXPECT_EQ(bridge.snapshot()->feed.timestamp, static_cast<std::uint64_t>(clock.now.load()));
}

TEST(Bridge, SnapshotsNeverMixStates) {
  auto const fx = tiny();
  Bridge bridge{ScheduleIndex::build(feed_of(fx), kDay)};
  auto const s1 = kDay.midnight_epoch() + scheduled(fx, "T1", "S1");
  auto const s2 = kDay.midnight_epoch() + scheduled(fx, "T1", "S2");

  std::atomic_bool done{false};
  std::atomic_int torn{0};
  std::atomic_int seen{0};
  std::thread reader{[&] {
    while (!done) {
      auto const m = decode(bridge.snapshot()->trip_updates);
      if (m.entities.empty()) {
        continue;
      }
      auto const& u = std::get<TripUpdate>(m.entities[0].payload).stop_time_updates;
      if (u.size() != 2 || u[0].arrival_delay != u[1].arrival_delay) {
        ++torn;
      }
      ++seen;
    }
  }};
  for (int d = 0; d < 2000; ++d) {
    ngsi::Notification n{"sub", 0, {}};
    n.data.push_back(mobility::to_context(mobility::ArrivalEstimation{"T1", "S1", s1 + d, std::nullopt}));
    n.data.push_back(mobility::to_context(mobility::ArrivalEstimation{"T1", "S2", s2 + d, std::nullopt}));
    bridge.on_notification(n);
  }
  done = true;
  reader.join();
  EXPECT_EQ(torn, 0);
  EXPECT_GT(seen, 0);
}

TEST(BridgeProperty, ReplayMatchesReference) {
  auto const fx = compose::gen_fixture(3, compose::FixtureSize::small);
  auto const schedule = ScheduleIndex::build(feed_of(fx), kDay);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (auto const& e : fx.entities) {
    if (auto const* st = std::get_if<mobility::StopTime>(&e)) {
      pairs.emplace_back(st->trip_ref, st->stop_ref);
    }
  }
  pairs.emplace_back("NOPE", "S1");

  std::mt19937 rng{31};
  for (int round = 0; round < 200; ++round) {
    Bridge bridge{schedule};
    test::ReferenceReplay ref{fx, kDay};
    auto const n = 1 + static_cast<int>(rng() % 30);
    std::uint64_t skipped = 0;
    for (int i = 0; i < n; ++i) {
      if (rng() % 3 == 0) {
        auto const id = "B" + std::to_string(rng() % 4);
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
        bridge.on_notification({"sub", 0, {mobility::to_context(mobility::VehiclePosition{id, trip, {lat, lon}, bearing, {}})}});
        ref.vehicle(id, trip, lat, lon, bearing);
      } else {
        auto const& [trip, stop] = pairs[rng() % pairs.size()];
        auto const est = kDay.midnight_epoch() + 5 * 3600 + static_cast<epoch_t>(rng() % (20 * 3600));
        bridge.on_notification(estimation(trip, stop, est));
        skipped += ref.estimation(trip, stop, est) ? 0 : 1;
      }
    }
    auto const snap = bridge.snapshot();
    auto const trips = test::oracle_decode(snap->trip_updates);
    auto const vehicles = test::oracle_decode(snap->vehicle_positions);
    ASSERT_TRUE(trips.ok) << trips.problem;
    ASSERT_TRUE(vehicles.ok) << vehicles.problem;
    ASSERT_EQ(test::canonical_view(trips.message), ref.trip_view()) << "round " << round;
    ASSERT_EQ(test::canonical_view(vehicles.message), ref.vehicle_view()) << "round " << round;
    ASSERT_EQ(snap->metrics.skipped, skipped);
    ASSERT_EQ(snap->metrics.notifications_applied, static_cast<std::uint64_t>(n));
  }
}

TEST(Bridge, HttpNotificationsAndEndpoints) {
  auto const fx = tiny();
  test::TempDir spool;
  BridgeOptions opts;
  opts.spool_dir = spool.path();
  auto bridge = std::make_shared<Bridge>(ScheduleIndex::build(feed_of(fx), kDay), opts);
  BridgeHttpApi api{bridge};
  api.start("127.0.0.1", 0);

  auto broker = std::make_shared<ngsi::Broker>();
  ngsi::LocalBrokerClient client{broker};
  bridge->start(client, api.notify_url());
  auto const e = kDay.midnight_epoch() + scheduled(fx, "T1", "S3");
  client.upsert(mobility::to_context(mobility::ArrivalEstimation{"T1", "S3", e + 300, std::nullopt}));
  broker->flush();
  ASSERT_TRUE(test::wait_until([&] { return bridge->snapshot()->metrics.notifications_applied == 1; }));

  auto const res = http::get(api.base_url() + "/gtfs-rt/trip-updates");
  EXPECT_EQ(res.status, 200);
  auto const o = test::oracle_decode(res.body);
  ASSERT_TRUE(o.ok) << o.problem;
  EXPECT_EQ(o.message.entity(0).trip_update().stop_time_update(0).arrival().delay(), 300);

  auto const metrics = nlohmann::json::parse(http::get(api.base_url() + "/metrics").body);
  EXPECT_EQ(metrics["notificationsApplied"], 1);
  auto const debug = nlohmann::json::parse(http::get(api.base_url() + "/gtfs-rt/debug").body);
  EXPECT_EQ(debug["entities"][0]["id"], "trip:T1");
  EXPECT_EQ(http::get(api.base_url() + "/gtfs-rt/vehicle-positions").status, 200);
  EXPECT_EQ(http::post(api.notify_url(), "{not json", "application/json").status, 400);

  EXPECT_EQ(read_file(spool / "trip-updates.pb"), res.body);
  bridge->stop();
  api.stop();
}
