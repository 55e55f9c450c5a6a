#include <gtest/gtest.h>

#include <random>

#include "atomic/mobility/consistency.hpp"
#include "atomic/mobility/model.hpp"
#include "generators.hpp"

using namespace atomic;
using namespace atomic::mobility;

namespace {

std::vector<TypedEntity> minimal_set() {
  Service svc{"WK", {true, true, true, true, true, false, false}, ServiceDate{2024, 1, 1}, ServiceDate{2024, 12, 31}};
  return {Agency{"A1", "City Bus", "https://bus.example.org", "Europe/Madrid"},
          Stop{"S1", "Plaza", {43.462, -3.810}},
          Stop{"S2", "Puerto", {43.465, -3.800}},
          Route{"R1", "A1", "1", 3},
          svc,
          Trip{"T1", "R1", "WK", "Puerto"},
          StopTime{"T1", "S1", 0, 8 * 3600, 8 * 3600},
          StopTime{"T1", "S2", 1, 8 * 3600 + 300, 8 * 3600 + 300}};
}

TypedEntity random_typed(std::mt19937& rng, std::size_t kind) {
  using test::random_id;
  using test::random_text;
  using test::uniform;
  using test::uniform_int;
  auto const loc = GeoPoint{uniform(rng, -90, 90), uniform(rng, -180, 180)};
  auto const maybe_time = [&]() -> std::optional<epoch_t> {
    if (rng() % 3 == 0) {
      return std::nullopt;
    }
    return uniform_int(rng, 1, 2'000'000'000);
  };
  switch (kind) {
    case 0: return Agency{random_id(rng, "A"), random_text(rng), "https://x.org/" + random_id(rng, ""), "UTC"};
    case 1: return Stop{random_id(rng, "S"), random_text(rng), loc};
    case 2: return Route{random_id(rng, "R"), random_id(rng, "A"), random_text(rng), uniform_int(rng, 0, 12)};
    case 3: {
      Service s{random_id(rng, "V"), {}, ServiceDate::from_days(uniform_int(rng, 0, 30000)), {}};
      for (auto& f : s.weekdays) {
        f = rng() % 2 == 0;
      }
      s.end_date = ServiceDate::from_days(s.start_date.days_since_epoch() + uniform_int(rng, 0, 900));
      return s;
    }
    case 4: return Trip{random_id(rng, "T"), random_id(rng, "R"), random_id(rng, "V"), random_text(rng)};
    case 5: {
      auto const arr = uniform_int(rng, 0, 30 * 3600);
      return StopTime{random_id(rng, "T"), random_id(rng, "S"), uniform_int(rng, 0, 500), arr,
                      arr + uniform_int(rng, 0, 600)};
    }
    case 6: return ArrivalEstimation{random_id(rng, "T"), random_id(rng, "S"), uniform_int(rng, 1, 2'000'000'000),
                                     maybe_time()};
    case 7: {
      VehiclePosition v{random_id(rng, "B"), std::nullopt, loc, std::nullopt, maybe_time()};
      if (rng() % 2 == 0) {
        v.trip_ref = random_id(rng, "T");
      }
      if (rng() % 2 == 0) {
        v.bearing = uniform(rng, 0, 360);
      }
      return v;
    }
    case 8: {
      auto const from = ServiceDate::from_days(uniform_int(rng, 0, 30000));
      return FeedPointer{random_id(rng, "F"), "file:///tmp/" + random_id(rng, "") + ".zip", random_id(rng, "v"), from,
                         ServiceDate::from_days(from.days_since_epoch() + uniform_int(rng, 0, 400))};
    }
    case 9: {
      auto const total = uniform_int(rng, 1, 900);
      return ParkingSpotGroup{random_id(rng, "P"), loc, total, uniform_int(rng, 0, total), maybe_time()};
    }
    default: return TrafficFlowObserved{random_id(rng, "X"), loc, uniform(rng, 0, 5000), maybe_time()};
  }
}

}  // namespace

TEST(Model, StopRoundTrip) {
  Stop const s{"S1", "Plaza", {43.462, -3.810}};
  auto const ctx = to_context(s);
  EXPECT_EQ(ctx.type, "GtfsStop");
  EXPECT_EQ(ctx.id, "urn:ngsi:GtfsStop:S1");
  EXPECT_EQ(ctx.text("stopId"), "S1");
  EXPECT_EQ(ctx.text("stopName"), "Plaza");
  ASSERT_TRUE(ctx.geo("location"));
  EXPECT_EQ(ctx.geo("location")->lat, 43.462);
  EXPECT_EQ(ctx.geo("location")->lon, -3.810);
  EXPECT_EQ(from_context(ctx), TypedEntity{s});
}

TEST(Model, MissingLocation) {
  auto ctx = to_context(Stop{"S1", "Plaza", {43.462, -3.810}});
  ctx.attributes.erase("location");
  try {
    from_context(ctx);
    FAIL() << "expected ModelError";
  } catch (ModelError const& e) {
    EXPECT_EQ(e.kind(), ModelError::Kind::missing_mandatory_field);
  }
}

TEST(Model, UnknownType) {
  ngsi::ContextEntity banana{"urn:x:1", "Banana", {}};
  banana.set("colour", std::string{"yellow"});
  try {
    from_context(banana);
    FAIL() << "expected ModelError";
  } catch (ModelError const& e) {
    EXPECT_EQ(e.kind(), ModelError::Kind::unknown_entity_type);
  }
}

TEST(Model, NonIntegralNumberRejected) {
  auto ctx = to_context(StopTime{"T1", "S1", 1, 100, 100});
  ctx.set("stopSequence", 1.5);
  EXPECT_THROW(from_context(ctx), ModelError);
}

TEST(Model, RefsAcceptPlainIds) {
  auto ctx = to_context(Trip{"T1", "R1", "WK", "x"});
  ctx.set("routeRef", std::string{"R1"});
  EXPECT_EQ(std::get<Trip>(from_context(ctx)).route_ref, "R1");
}

TEST(ModelProperty, RoundTripEveryKind) {
  std::mt19937 rng{7};
  for (int i = 0; i < 2000; ++i) {
    auto const kind = static_cast<std::size_t>(i) % kTypeNames.size();
    auto const x = random_typed(rng, kind);
    auto const ctx = to_context(x);
    ASSERT_EQ(ctx.type, kTypeNames[kind]);
    ASSERT_EQ(from_context(ctx), x) << ctx.id;
  }
}

TEST(Consistency, MinimalSetIsClean) {
  auto const report = validate_consistency(minimal_set());
  EXPECT_TRUE(report.empty()) << report.summary();
}

TEST(Consistency, MissingRouteIsOneDanglingRef) {
  auto set = minimal_set();
  std::erase_if(set, [](TypedEntity const& e) { return std::holds_alternative<Route>(e); });
  auto const report = validate_consistency(set);
  ASSERT_EQ(report.findings.size(), 1U) << report.summary();
  EXPECT_EQ(report.findings[0].kind, Finding::Kind::dangling_reference);
  EXPECT_NE(report.findings[0].detail.find("routeRef"), std::string::npos);
}

TEST(Consistency, RepeatedSequenceFlagged) {
  auto set = minimal_set();
  std::get<StopTime>(set.back()).stop_sequence = 0;
  auto const report = validate_consistency(set);
  ASSERT_EQ(report.findings.size(), 1U) << report.summary();
  EXPECT_NE(report.findings[0].detail.find("stopSequence"), std::string::npos);
}

TEST(Consistency, ContextEntitiesAndConversionFailures) {
  std::vector<ngsi::ContextEntity> ctx;
  for (auto const& e : minimal_set()) {
    ctx.push_back(to_context(e));
  }
  ngsi::ContextEntity other{"urn:x:1", "Banana", {}};
  ctx.push_back(other);
  EXPECT_TRUE(validate_consistency(ctx).empty());

  ctx[1].attributes.erase("location");
  auto const report = validate_consistency(ctx);
  EXPECT_EQ(report.count(Finding::Kind::conversion_failure), 1U);
  // The stop that failed conversion is absent, so its stop time dangles.
  EXPECT_EQ(report.count(Finding::Kind::dangling_reference), 1U);
}

TEST(Consistency, RealtimeAndPointerInvariants) {
  auto set = minimal_set();
  set.emplace_back(ArrivalEstimation{"T1", "S2", 0, std::nullopt});
  set.emplace_back(VehiclePosition{"B1", "T9", {10, 10}, 360.0, std::nullopt});
  set.emplace_back(FeedPointer{"f", "", "v", ServiceDate{2024, 2, 1}, ServiceDate{2024, 1, 1}});
  set.emplace_back(ParkingSpotGroup{"P", {1, 1}, 10, 11, std::nullopt});
  set.emplace_back(TrafficFlowObserved{"X", {1, 1}, -1.0, std::nullopt});
  auto const report = validate_consistency(set);
  // estimatedArrival, tripRef T9, bearing, sourceUrl, validFrom, availableSpots, intensity
  EXPECT_EQ(report.findings.size(), 7U) << report.summary();
}

TEST(ConsistencyProperty, ExactlyKInjectedViolations) {
  std::mt19937 rng{11};
  for (int round = 0; round < 300; ++round) {
    auto set = test::random_static_set(rng);
    ASSERT_TRUE(validate_consistency(set).empty()) << "generator produced an inconsistent set";
    auto const k = test::uniform_int(rng, 0, 6);
    auto const applied = test::inject_violations(rng, set, k);
    auto const report = validate_consistency(set);
    ASSERT_EQ(report.findings.size(), static_cast<std::size_t>(applied)) << report.summary();
  }
}
