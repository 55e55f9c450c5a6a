#include <gtest/gtest.h>

#include <chrono>
#include <iostream>
#include <random>
#include <thread>

#include "atomic/common/http_client.hpp"
#include "atomic/fetcher/fetcher.hpp"
#include "atomic/fetcher/remote_plugin.hpp"
#include "atomic/router/engine.hpp"
#include "atomic/router/http_api.hpp"
#include "router_oracle.hpp"

using namespace atomic;
using namespace atomic::router;

namespace {

ServiceDate const kDay{2024, 3, 5};  // a Tuesday
epoch_t const kMidnight = kDay.midnight_epoch();

constexpr int hm(int h, int m) { return h * 3600 + m * 60; }

/// Stops A, B, C, X and a daily service; trips are added per test.
gtfs::GtfsFeed base_feed() {
  gtfs::GtfsFeed f;
  f.agencies.push_back({"AG", "Agency", "https://example.org", "UTC"});
  for (auto const* s : {"A", "B", "C", "X"}) {
    f.stops.push_back({s, s, {43.0, -3.8}});
  }
  f.routes.push_back({"R", "AG", "R", 3});
  f.services.push_back({"D", {true, true, true, true, true, true, true}, ServiceDate{2024, 1, 1},
                        ServiceDate{2024, 12, 31}});
  return f;
}

void add_trip(gtfs::GtfsFeed& f, std::string const& id, std::vector<std::pair<std::string, int>> const& visits,
              std::string const& service = "D") {
  f.trips.push_back({id, "R", service, ""});
  int seq = 1;
  for (auto const& [stop, t] : visits) {
    f.stop_times.push_back({id, stop, seq++, t, t});
  }
}

rt::FeedMessage delay_at(std::string const& trip, std::string const& stop, std::int32_t delay) {
  rt::FeedMessage m;
  m.entities.push_back({"trip:" + trip, rt::TripUpdate{trip, {{std::nullopt, stop, delay, std::nullopt}}, {}}});
  return m;
}

std::optional<test::OracleBest> oracle(gtfs::GtfsFeed const& f, std::string const& from, std::string const& to,
                                       epoch_t after, test::DelayMap const& delays = {}) {
  return test::brute_force(test::oracle_trips(f, kDay, delays), from, to, after);
}

std::vector<std::string> trip_ids(Journey const& j) {
  std::vector<std::string> out;
  for (auto const& l : j.legs) {
    out.push_back(l.trip_id);
  }
  return out;
}

}  // namespace

TEST(BuildGraph, OneConnectionPerConsecutivePair) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 10)}, {"C", hm(8, 20)}});
  auto const g = build_graph(f, kDay);
  ASSERT_EQ(g.connections.size(), 2U);
  EXPECT_EQ(g.stop_ids[static_cast<std::size_t>(g.connections[0].dep_stop)], "A");
  EXPECT_EQ(g.stop_ids[static_cast<std::size_t>(g.connections[0].arr_stop)], "B");
  EXPECT_EQ(g.connections[0].dep_time, kMidnight + hm(8, 0));
  EXPECT_EQ(g.connections[1].arr_time, kMidnight + hm(8, 20));
}

TEST(BuildGraph, CalendarAndValidity) {
  auto f = base_feed();
  f.services.push_back({"WE", {false, false, false, false, false, true, true}, ServiceDate{2024, 1, 1},
                        ServiceDate{2024, 12, 31}});
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 10)}}, "WE");
  EXPECT_TRUE(build_graph(f, kDay).connections.empty());
  EXPECT_EQ(build_graph(f, ServiceDate{2024, 3, 9}).connections.size(), 1U);
  EXPECT_THROW(build_graph(f, ServiceDate{2025, 1, 1}), FeedNotValidOnDate);
}

TEST(BuildGraph, SortedByDeparture) {
  auto f = base_feed();
  add_trip(f, "T2", {{"A", hm(9, 0)}, {"B", hm(9, 10)}});
  add_trip(f, "T1", {{"B", hm(8, 0)}, {"C", hm(8, 10)}, {"A", hm(8, 30)}});
  auto const g = build_graph(f, kDay);
  ASSERT_EQ(g.connections.size(), 3U);
  for (auto i = 1U; i < g.connections.size(); ++i) {
    EXPECT_LE(g.connections[i - 1].dep_time, g.connections[i].dep_time);
  }
  for (auto const& c : g.connections) {
    EXPECT_GE(c.arr_time, c.dep_time);
  }
}

TEST(ApplyRealtime, DelayPropagatesAlongTrip) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 10)}, {"C", hm(8, 20)}});
  auto const g = build_graph(f, kDay);
  auto const d = apply_realtime(g, delay_at("T1", "B", 300));
  ASSERT_EQ(d.connections.size(), 2U);
  EXPECT_EQ(d.connections[0].dep_time, kMidnight + hm(8, 0));
  EXPECT_EQ(d.connections[0].arr_time, kMidnight + hm(8, 10) + 300);
  EXPECT_EQ(d.connections[1].dep_time, kMidnight + hm(8, 10) + 300);
  EXPECT_EQ(d.connections[1].arr_time, kMidnight + hm(8, 20) + 300);
  EXPECT_EQ(d.delays.at({"T1", "B"}), 300);

  auto const zero = apply_realtime(g, delay_at("T1", "B", 0));
  EXPECT_EQ(zero.connections.size(), g.connections.size());
  for (auto i = 0U; i < g.connections.size(); ++i) {
    EXPECT_EQ(zero.connections[i].dep_time, g.connections[i].dep_time);
    EXPECT_EQ(zero.connections[i].arr_time, g.connections[i].arr_time);
  }

  auto const unknown = apply_realtime(g, delay_at("T9", "B", 600));
  EXPECT_TRUE(unknown.delays.empty());
  EXPECT_EQ(unknown.connections[1].arr_time, g.connections[1].arr_time);
}

TEST(ApplyRealtime, LaterUpdatesOverrideAndNothingRunsBackwards) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 10)}, {"C", hm(8, 20)}});
  auto const g = build_graph(f, kDay);

  rt::FeedMessage m;
  m.entities.push_back({"trip:T1", rt::TripUpdate{"T1",
                                                  {{std::nullopt, "B", 600, std::nullopt},
                                                   {std::nullopt, "C", -900, std::nullopt}},
                                                  {}}});
  auto const d = apply_realtime(g, m);
  // C would arrive at 08:05, before leaving B at 08:20; it is held at 08:20.
  EXPECT_EQ(d.connections[1].dep_time, kMidnight + hm(8, 20));
  EXPECT_EQ(d.connections[1].arr_time, kMidnight + hm(8, 20));

  rt::FeedMessage by_time;
  by_time.entities.push_back(
      {"trip:T1", rt::TripUpdate{"T1", {{2, "", std::nullopt, kMidnight + hm(8, 12)}}, {}}});
  auto const t = apply_realtime(g, by_time);
  EXPECT_EQ(t.connections[0].arr_time, kMidnight + hm(8, 12));
  EXPECT_EQ(t.delays.at({"T1", "B"}), 120);

  // A newer message replaces the old delays outright.
  auto const cleared = apply_realtime(d, rt::FeedMessage{});
  EXPECT_EQ(cleared.connections[1].arr_time, kMidnight + hm(8, 20));
  EXPECT_TRUE(cleared.delays.empty());
}

TEST(EarliestArrival, SingleTrip) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 30)}});
  auto const g = build_graph(f, kDay);
  auto const j = earliest_arrival(g, "A", "B", kMidnight + hm(7, 0));
  ASSERT_TRUE(j);
  EXPECT_EQ(j->total_arrival, kMidnight + hm(8, 30));
  ASSERT_EQ(j->legs.size(), 1U);
  EXPECT_EQ(j->legs[0], (Leg{"T1", "A", kMidnight + hm(8, 0), "B", kMidnight + hm(8, 30)}));

  auto const delayed = earliest_arrival(apply_realtime(g, delay_at("T1", "B", 300)), "A", "B", kMidnight + hm(7, 0));
  ASSERT_TRUE(delayed);
  auto const o = oracle(f, "A", "B", kMidnight + hm(7, 0), {{{"T1", "B"}, 300}});
  ASSERT_TRUE(o);
  EXPECT_EQ(delayed->total_arrival, o->arrival);
  EXPECT_EQ(delayed->total_arrival, kMidnight + hm(8, 35));

  EXPECT_FALSE(earliest_arrival(g, "A", "B", kMidnight + hm(8, 1)));
  EXPECT_FALSE(earliest_arrival(g, "B", "A", kMidnight));
  EXPECT_THROW(earliest_arrival(g, "A", "Nowhere", kMidnight), UnknownStop);
  auto const same = earliest_arrival(g, "A", "A", kMidnight + 5);
  ASSERT_TRUE(same);
  EXPECT_TRUE(same->legs.empty());
  EXPECT_EQ(same->total_arrival, kMidnight + 5);
}

TEST(EarliestArrival, TransferBeatsDirect) {
  auto f = base_feed();
  add_trip(f, "DIRECT", {{"A", hm(8, 0)}, {"B", hm(9, 0)}});
  add_trip(f, "LEG1", {{"A", hm(8, 0)}, {"X", hm(8, 20)}});
  add_trip(f, "LEG2", {{"X", hm(8, 25)}, {"B", hm(8, 50)}});
  auto const g = build_graph(f, kDay);
  auto const j = earliest_arrival(g, "A", "B", kMidnight + hm(7, 0));
  ASSERT_TRUE(j);
  auto const o = oracle(f, "A", "B", kMidnight + hm(7, 0));
  ASSERT_TRUE(o);
  EXPECT_EQ(j->total_arrival, o->arrival);
  EXPECT_EQ(j->total_arrival, kMidnight + hm(8, 50));
  EXPECT_EQ(trip_ids(*j), (std::vector<std::string>{"LEG1", "LEG2"}));
}

TEST(EarliestArrival, TransferSlackIsEnforced) {
  auto f = base_feed();
  add_trip(f, "LEG1", {{"A", hm(8, 0)}, {"X", hm(8, 20)}});
  add_trip(f, "TIGHT", {{"X", hm(8, 20) + 119}, {"B", hm(8, 40)}});
  add_trip(f, "OK", {{"X", hm(8, 22)}, {"B", hm(8, 45)}});
  auto const j = earliest_arrival(build_graph(f, kDay), "A", "B", kMidnight);
  ASSERT_TRUE(j);
  EXPECT_EQ(trip_ids(*j), (std::vector<std::string>{"LEG1", "OK"}));
  EXPECT_EQ(j->total_arrival, kMidnight + hm(8, 45));
}

TEST(EarliestArrival, TiesPreferFewerLegsThenTripIds) {
  auto f = base_feed();
  add_trip(f, "A1", {{"A", hm(8, 0)}, {"X", hm(8, 10)}});
  add_trip(f, "A2", {{"X", hm(8, 15)}, {"B", hm(8, 30)}});
  add_trip(f, "Z9", {{"A", hm(8, 0)}, {"B", hm(8, 30)}});
  auto j = earliest_arrival(build_graph(f, kDay), "A", "B", kMidnight);
  ASSERT_TRUE(j);
  EXPECT_EQ(trip_ids(*j), (std::vector<std::string>{"Z9"}));

  add_trip(f, "M5", {{"A", hm(7, 50)}, {"B", hm(8, 30)}});
  j = earliest_arrival(build_graph(f, kDay), "A", "B", kMidnight);
  ASSERT_TRUE(j);
  EXPECT_EQ(trip_ids(*j), (std::vector<std::string>{"M5"}));
}

TEST(RouterProperty, MatchesBruteForce) {
  std::mt19937 rng{41};
  auto const t0 = std::chrono::steady_clock::now();
  int found = 0;
  int transfers = 0;
  for (int n = 0; n < 500; ++n) {
    auto const f = test::random_network(rng, kDay);
    auto const [from, to] = test::random_query(rng, f);
    auto const after = kMidnight + static_cast<epoch_t>(6 * 3600 + rng() % 1200);

    auto const got = earliest_arrival(build_graph(f, kDay), from, to, after);
    auto const trips = test::oracle_trips(f, kDay);
    auto const want = test::brute_force(trips, from, to, after);
    ASSERT_EQ(got.has_value(), want.has_value()) << "network " << n;
    if (got) {
      ASSERT_EQ(got->total_arrival, want->arrival) << "network " << n;
      ASSERT_EQ(trip_ids(*got), want->trips) << "network " << n;
      ASSERT_EQ(test::journey_problem(trips, *got, from, to, after), "") << "network " << n;
      ++found;
      transfers += got->legs.size() > 1 ? 1 : 0;
    }
  }
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds{30});
  // The generator must exercise transfers, not just direct rides.
  EXPECT_GT(found, 150);
  EXPECT_GT(transfers, 20);
  std::cout << found << " journeys, " << transfers << " with transfers\n";
}

TEST(RouterProperty, DelayedNetworksMatchBruteForce) {
  std::mt19937 rng{43};
  for (int n = 0; n < 300; ++n) {
    auto const f = test::random_network(rng, kDay);
    test::DelayMap delays;
    rt::FeedMessage msg;
    for (auto const& st : f.stop_times) {
      if (rng() % 4 == 0) {
        auto const d = static_cast<std::int32_t>(rng() % 1200) - 300;
        if (delays.emplace(std::pair{st.trip_ref, st.stop_ref}, d).second) {
          msg.entities.push_back({"trip:" + st.trip_ref + ":" + st.stop_ref,
                                  rt::TripUpdate{st.trip_ref, {{std::nullopt, st.stop_ref, d, std::nullopt}}, {}}});
        }
      }
    }
    auto const [from, to] = test::random_query(rng, f);
    auto const after = kMidnight + static_cast<epoch_t>(6 * 3600 + rng() % 1200);
    auto const g = apply_realtime(build_graph(f, kDay), msg);
    auto const got = earliest_arrival(g, from, to, after);
    auto const trips = test::oracle_trips(f, kDay, delays);
    auto const want = test::brute_force(trips, from, to, after);
    ASSERT_EQ(got.has_value(), want.has_value()) << "network " << n;
    if (got) {
      ASSERT_EQ(got->total_arrival, want->arrival) << "network " << n;
      ASSERT_EQ(trip_ids(*got), want->trips) << "network " << n;
      ASSERT_EQ(test::journey_problem(trips, *got, from, to, after), "") << "network " << n;
    }
  }
}

TEST(Delays, CanRescueAMissedTransfer) {
  auto f = base_feed();
  add_trip(f, "FEEDER", {{"A", hm(8, 0)}, {"X", hm(8, 10)}});
  add_trip(f, "MISSED", {{"X", hm(8, 11)}, {"B", hm(8, 30)}});
  add_trip(f, "LATE", {{"A", hm(8, 30)}, {"B", hm(9, 0)}});
  auto const g = build_graph(f, kDay);
  EXPECT_EQ(earliest_arrival(g, "A", "B", kMidnight)->total_arrival, kMidnight + hm(9, 0));
  // Holding MISSED for five minutes makes the connection, and the optimum
  // gets earlier: delays are not monotone once transfers are involved.
  auto const held = earliest_arrival(apply_realtime(g, delay_at("MISSED", "X", 300)), "A", "B", kMidnight);
  ASSERT_TRUE(held);
  EXPECT_EQ(held->total_arrival, kMidnight + hm(8, 35));
}

// Non-negative delays never make a schedule-feasible journey earlier, so any
// delayed optimum that beats the scheduled one must ride a transfer the
// schedule misses.
TEST(RouterProperty, NonNegativeDelaysOnlyHelpThroughRescuedTransfers) {
  std::mt19937 rng{47};
  int improved = 0;
  for (int n = 0; n < 500; ++n) {
    auto const f = test::random_network(rng, kDay);
    rt::FeedMessage msg;
    for (auto const& st : f.stop_times) {
      if (rng() % 3 == 0) {
        msg.entities.push_back({"e" + std::to_string(msg.entities.size()),
                                rt::TripUpdate{st.trip_ref,
                                               {{std::nullopt, st.stop_ref,
                                                 static_cast<std::int32_t>(rng() % 900), std::nullopt}},
                                               {}}});
      }
    }
    auto const [from, to] = test::random_query(rng, f);
    auto const after = kMidnight + 6 * 3600;
    auto const g = build_graph(f, kDay);
    auto const before = earliest_arrival(g, from, to, after);
    auto const later = earliest_arrival(apply_realtime(g, msg), from, to, after);
    if (!later || (before && later->total_arrival >= before->total_arrival)) {
      continue;
    }
    ++improved;
    ASSERT_GT(later->legs.size(), 1U) << "a direct ride got earlier, network " << n;

    // Replay the delayed journey on scheduled times: it must be infeasible.
    auto const scheduled = test::oracle_trips(f, kDay);
    Journey replay = *later;
    for (auto& leg : replay.legs) {
      for (auto const& e : scheduled.at(leg.trip_id)) {
        if (e.stop == leg.board_stop) {
          leg.board_time = e.departure;
        }
        if (e.stop == leg.alight_stop) {
          leg.alight_time = e.arrival;
        }
      }
    }
    replay.total_arrival = replay.legs.back().alight_time;
    ASSERT_NE(test::journey_problem(scheduled, replay, from, to, after), "") << "network " << n;
  }
  std::cout << improved << " delayed optima beat the schedule\n";
}

TEST(Engine, LoadsFeedsAndKeepsRealtime) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 30)}});
  RouterEngine engine{{kDay}};
  EXPECT_THROW(engine.route("A", "B", kMidnight), NoFeedLoaded);

  engine.apply_realtime(delay_at("T1", "B", 300));
  engine.load_feed({"city", "v1", gtfs::write_feed(f), f});
  auto j = engine.route("A", "B", kMidnight);
  ASSERT_TRUE(j);
  EXPECT_EQ(j->total_arrival, kMidnight + hm(8, 35));

  engine.apply_realtime(rt::FeedMessage{});
  EXPECT_EQ(engine.route("A", "B", kMidnight)->total_arrival, kMidnight + hm(8, 30));

  auto expired = f;
  expired.services[0].end_date = ServiceDate{2024, 3, 1};
  EXPECT_THROW(engine.load_feed({"city", "v2", gtfs::write_feed(expired), expired}), fetcher::PluginError);
  EXPECT_EQ(engine.status_json()["feedVersion"], "v1");
  EXPECT_EQ(engine.status_json()["feedsLoaded"], 1);
}

TEST(Engine, QueriesSeeWholeSnapshots) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 10)}, {"C", hm(8, 20)}});
  RouterEngine engine{{kDay}};
  engine.load_feed({"city", "v1", {}, f});
  std::atomic_bool done{false};
  std::atomic_int bad{0};
  std::thread reader{[&] {
    while (!done) {
      auto const g = engine.graph();
      // Both connections of T1 always carry the same delay.
      auto const d1 = g->connections[0].arr_time - (kMidnight + hm(8, 10));
      auto const d2 = g->connections[1].arr_time - (kMidnight + hm(8, 20));
      if (d1 != d2) {
        ++bad;
      }
    }
  }};
  for (int d = 0; d < 500; ++d) {
    engine.apply_realtime(delay_at("T1", "B", d));
  }
  done = true;
  reader.join();
  EXPECT_EQ(bad, 0);
}

TEST(Engine, PollerKeepsLastDelaysOnFailure) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 30)}});
  RouterEngine engine{{kDay}};
  engine.load_feed({"city", "v1", {}, f});
  bool up = true;
  RealtimePoller poller{engine,
                        [&]() -> std::string {
                          if (!up) {
                            throw std::runtime_error{"bridge down"};
                          }
                          return rt::encode(delay_at("T1", "B", 300));
                        },
                        std::chrono::milliseconds{10}};
  EXPECT_TRUE(poller.poll_once());
  up = false;
  EXPECT_FALSE(poller.poll_once());
  EXPECT_EQ(poller.failures(), 1U);
  EXPECT_EQ(engine.route("A", "B", kMidnight)->total_arrival, kMidnight + hm(8, 35));
}

TEST(HttpApi, RouteAndPluginEndpoints) {
  auto f = base_feed();
  add_trip(f, "T1", {{"A", hm(8, 0)}, {"B", hm(8, 30)}});
  auto engine = std::make_shared<RouterEngine>(RouterOptions{kDay});
  RouterHttpApi api{engine};
  api.start("127.0.0.1", 0);
  auto const base = api.base_url();
  auto const query = base + "/route?from=A&to=B&departAfter=2024-03-05T07:00:00Z";

  EXPECT_EQ(http::get(query).status, 503);

  fetcher::RemotePlugin plugin{base};
  plugin.load_feed({"city", "v1", gtfs::write_feed(f), f});
  auto res = http::get(query);
  ASSERT_EQ(res.status, 200);
  auto body = nlohmann::json::parse(res.body);
  EXPECT_EQ(body["found"], true);
  EXPECT_EQ(body["arrival"], "2024-03-05T08:30:00Z");
  EXPECT_EQ(body["legs"][0]["tripId"], "T1");

  res = http::post(base + "/plugin/realtime", rt::encode(delay_at("T1", "B", 300)), "application/x-protobuf");
  EXPECT_EQ(res.status, 200);
  body = nlohmann::json::parse(http::get(query).body);
  EXPECT_EQ(body["arrivalEpoch"], kMidnight + hm(8, 35));

  EXPECT_EQ(http::post(base + "/plugin/realtime", "\x0a\x05", "application/x-protobuf").status, 400);
  EXPECT_EQ(http::get(base + "/route?from=A&to=Q&departAfter=2024-03-05T07:00:00Z").status, 404);
  EXPECT_EQ(http::get(base + "/route?from=A&to=B").status, 400);
  EXPECT_EQ(http::get(base + "/route?from=A&to=B&departAfter=yesterday").status, 400);
  body = nlohmann::json::parse(http::get(base + "/route?from=B&to=A&departAfter=2024-03-05T07:00:00Z").body);
  EXPECT_EQ(body["found"], false);
  EXPECT_EQ(nlohmann::json::parse(http::get(base + "/status").body)["feedId"], "city");
  api.stop();
}
