#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "atomic/ngsi/client.hpp"
#include "atomic/rt/feed.hpp"
#include "atomic/rt/schedule.hpp"

namespace atomic::rt {

struct BridgeOptions {
  /// Entries not updated for twice this long are dropped at rebuild.
  epoch_t horizon_seconds{7200};
  Clock clock = system_now;
  /// When set, every rebuild also writes trip-updates.pb and
  /// vehicle-positions.pb here.
  std::optional<std::filesystem::path> spool_dir;
};

struct BridgeMetrics {
  std::uint64_t notifications_applied{0};
  std::uint64_t skipped{0};    // estimations for a (trip, stop) outside the schedule
  std::uint64_t malformed{0};  // entities that failed conversion or range checks
  std::uint64_t evicted{0};
  epoch_t last_rebuild{0};
};

/// Immutable view published after every rebuild.
struct BridgeSnapshot {
  FeedMessage feed;  // all entities, ordered by id
  std::string trip_updates;
  std::string vehicle_positions;
  BridgeMetrics metrics;
};

/// Translates ArrivalEstimation and VehiclePosition notifications into a
/// FULL_DATASET GTFS-realtime feed. Trip updates are keyed "trip:<tripId>",
/// vehicles "vehicle:<vehicleId>"; a later notification for the same key
/// replaces the earlier one.
class Bridge {
public:
  explicit Bridge(ScheduleIndex schedule, BridgeOptions opts = {});
  ~Bridge();

  Bridge(Bridge const&) = delete;
  Bridge& operator=(Bridge const&) = delete;

  /// Subscribes to ArrivalEstimation and VehiclePosition. Without
  /// `notify_url` the subscriptions deliver to this object in-process.
  /// Throws BrokerError; on failure no subscription is left behind.
  void start(ngsi::BrokerClient& broker, std::optional<std::string> notify_url = std::nullopt);
  /// Removes the subscriptions if the broker is still reachable.
  void stop();
  std::vector<std::string> subscription_ids() const;

  /// Never throws on bad content; such entities are counted and dropped.
  void on_notification(ngsi::Notification const& n);

  /// Re-evaluates staleness against the clock and republishes.
  void rebuild();

  std::shared_ptr<BridgeSnapshot const> snapshot() const;
  nlohmann::json metrics_json() const;

private:
  struct StopState {
    std::string stop_id;
    std::int32_t delay{0};
    epoch_t estimated{0};
  };
  struct TripState {
    std::map<int, StopState> stops;  // by stop_sequence
    epoch_t timestamp{0};
    epoch_t touched{0};
  };
  struct VehicleState {
    mobility::VehiclePosition position;
    epoch_t timestamp{0};
    epoch_t touched{0};
  };

  void apply(ngsi::ContextEntity const& e, epoch_t now);
  void rebuild_locked(epoch_t now);

  ScheduleIndex schedule_;
  BridgeOptions opts_;

  mutable std::mutex state_mutex_;
  std::map<std::string, TripState> trips_;
  std::map<std::string, VehicleState> vehicles_;
  BridgeMetrics metrics_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<BridgeSnapshot const> snapshot_;

  ngsi::BrokerClient* broker_{nullptr};
  std::vector<std::string> subscriptions_;
};

}  // namespace atomic::rt
