#include "atomic/rt/bridge.hpp"

#include <limits>

#include <spdlog/spdlog.h>

#include "atomic/common/io.hpp"
#include "atomic/mobility/model.hpp"

namespace atomic::rt {

namespace {

constexpr char const* kWatchedTypes[] = {"ArrivalEstimation", "VehiclePosition"};

}  // namespace

Bridge::Bridge(ScheduleIndex schedule, BridgeOptions opts) : schedule_{std::move(schedule)}, opts_{std::move(opts)} {
  std::lock_guard lock{state_mutex_};
  rebuild_locked(opts_.clock());
}

Bridge::~Bridge() { stop(); }

void Bridge::start(ngsi::BrokerClient& broker, std::optional<std::string> notify_url) {
  std::vector<std::string> created;
  try {
    for (auto const* type : kWatchedTypes) {
      ngsi::Subscription s;
      s.entity_type = type;
      if (notify_url) {
        s.target.url = *notify_url;
      } else {
        s.target.sink = [this](ngsi::Notification const& n) { on_notification(n); };
      }
      created.push_back(broker.subscribe(s));
    }
  } catch (...) {
    for (auto const& id : created) {
      try {
        broker.unsubscribe(id);
      } catch (ngsi::BrokerError const&) {
      }
    }
    throw;
  }
  broker_ = &broker;
  subscriptions_ = std::move(created);
}

void Bridge::stop() {
  if (broker_ == nullptr) {
    return;
  }
  for (auto const& id : subscriptions_) {
    try {
      broker_->unsubscribe(id);
    } catch (ngsi::BrokerError const& e) {
      spdlog::warn("gtfs-rt-bridge: could not remove subscription {}: {}", id, e.what());
    }
  }
  subscriptions_.clear();
  broker_ = nullptr;
}

std::vector<std::string> Bridge::subscription_ids() const { return subscriptions_; }

void Bridge::on_notification(ngsi::Notification const& n) {
  std::lock_guard lock{state_mutex_};
  auto const now = opts_.clock();
  for (auto const& e : n.data) {
    apply(e, now);
  }
  ++metrics_.notifications_applied;
  rebuild_locked(now);
}

void Bridge::apply(ngsi::ContextEntity const& e, epoch_t now) {
  try {
    if (e.type == "ArrivalEstimation") {
      auto const a = mobility::from_context_as<mobility::ArrivalEstimation>(e);
      auto const sched = schedule_.find(a.trip_ref, a.stop_ref);
      if (!sched) {
        ++metrics_.skipped;
        return;
      }
      auto const delay = a.estimated_arrival - sched->arrival;
      if (delay < std::numeric_limits<std::int32_t>::min() || delay > std::numeric_limits<std::int32_t>::max()) {
        throw mobility::ModelError{mobility::ModelError::Kind::missing_mandatory_field,
                                   "delay out of int32 range for " + e.id};
      }
      auto& trip = trips_[a.trip_ref];
      trip.stops[sched->stop_sequence] = StopState{a.stop_ref, static_cast<std::int32_t>(delay), a.estimated_arrival};
      trip.timestamp = a.observed_at.value_or(now);
      trip.touched = now;
    } else if (e.type == "VehiclePosition") {
      auto v = mobility::from_context_as<mobility::VehiclePosition>(e);
      auto& state = vehicles_[v.vehicle_id];
      state.timestamp = v.observed_at.value_or(now);
      state.touched = now;
      state.position = std::move(v);
    } else {
      ++metrics_.malformed;
      spdlog::warn("gtfs-rt-bridge: ignoring notified entity {} of type {}", e.id, e.type);
    }
  } catch (mobility::ModelError const& err) {
    ++metrics_.malformed;
    spdlog::warn("gtfs-rt-bridge: dropping {}: {}", e.id, err.what());
  }
}

void Bridge::rebuild() {
  std::lock_guard lock{state_mutex_};
  rebuild_locked(opts_.clock());
}

void Bridge::rebuild_locked(epoch_t now) {
  auto const cutoff = now - 2 * opts_.horizon_seconds;
  metrics_.evicted += std::erase_if(trips_, [&](auto const& kv) { return kv.second.touched < cutoff; });
  metrics_.evicted += std::erase_if(vehicles_, [&](auto const& kv) { return kv.second.touched < cutoff; });
  metrics_.last_rebuild = now;

  auto snap = std::make_shared<BridgeSnapshot>();
  snap->feed.timestamp = static_cast<std::uint64_t>(now);
  FeedMessage trips_only = snap->feed;
  FeedMessage vehicles_only = snap->feed;

  for (auto const& [trip_id, state] : trips_) {
    TripUpdate tu{trip_id, {}, static_cast<std::uint64_t>(state.timestamp)};
    for (auto const& [seq, s] : state.stops) {
      tu.stop_time_updates.push_back(StopTimeUpdate{static_cast<std::uint32_t>(seq), s.stop_id, s.delay, s.estimated});
    }
    trips_only.entities.push_back(FeedEntity{"trip:" + trip_id, std::move(tu)});
  }
  for (auto const& [vehicle_id, state] : vehicles_) {
    auto const& p = state.position;
    VehiclePosition vp{p.trip_ref,
                       vehicle_id,
                       static_cast<float>(p.location.lat),
                       static_cast<float>(p.location.lon),
                       p.bearing ? std::optional{static_cast<float>(*p.bearing)} : std::nullopt,
                       static_cast<std::uint64_t>(state.timestamp)};
    vehicles_only.entities.push_back(FeedEntity{"vehicle:" + vehicle_id, std::move(vp)});
  }
  // "trip:" sorts before "vehicle:", so concatenation keeps id order.
  snap->feed.entities = trips_only.entities;
  snap->feed.entities.insert(end(snap->feed.entities), begin(vehicles_only.entities), end(vehicles_only.entities));
  snap->trip_updates = encode(trips_only);
  snap->vehicle_positions = encode(vehicles_only);
  snap->metrics = metrics_;

  if (opts_.spool_dir) {
    try {
      write_file_atomic(*opts_.spool_dir / "trip-updates.pb", snap->trip_updates);
      write_file_atomic(*opts_.spool_dir / "vehicle-positions.pb", snap->vehicle_positions);
    } catch (IoError const& e) {
      spdlog::warn("gtfs-rt-bridge: spool write failed: {}", e.what());
    }
  }

  std::lock_guard lock{snapshot_mutex_};
  snapshot_ = std::move(snap);
}

std::shared_ptr<BridgeSnapshot const> Bridge::snapshot() const {
  std::lock_guard lock{snapshot_mutex_};
  return snapshot_;
}

nlohmann::json Bridge::metrics_json() const {
  auto const m = snapshot()->metrics;
  return {{"notificationsApplied", m.notifications_applied},
          {"skipped", m.skipped},
          {"malformed", m.malformed},
          {"evicted", m.evicted},
          {"lastRebuildEpoch", m.last_rebuild}};
}

}  // namespace atomic::rt
