#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "atomic/fetcher/plugin.hpp"
#include "atomic/router/search.hpp"

namespace atomic::router {

struct NoFeedLoaded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RouterOptions {
  /// Service day to plan on; today by `clock` when unset.
  std::optional<ServiceDate> date;
  Clock clock = system_now;
};

/// The routing engine behind the fetcher's plugin interface. Holds one feed
/// at a time; loading another feed id replaces it. Queries read an immutable
/// graph snapshot, so they never block loads or realtime updates.
class RouterEngine final : public fetcher::RoutingEnginePlugin {
public:
  explicit RouterEngine(RouterOptions opts = {});

  /// Throws PluginError when the feed is not valid on the planning date.
  void load_feed(fetcher::FeedDelivery const& delivery) override;
  bool supports_realtime() const override { return true; }
  /// Applies on top of the loaded feed and is kept for later loads.
  void apply_realtime(rt::FeedMessage const& msg) override;

  /// Throws NoFeedLoaded and UnknownStop.
  std::optional<Journey> route(std::string const& from, std::string const& to, epoch_t depart_after) const;

  std::shared_ptr<TransitGraph const> graph() const;
  ServiceDate planning_date() const;
  nlohmann::json status_json() const;

private:
  RouterOptions opts_;
  mutable std::mutex mutex_;
  std::shared_ptr<TransitGraph const> base_;
  std::shared_ptr<TransitGraph const> current_;
  std::optional<rt::FeedMessage> realtime_;
  std::string feed_id_;
  std::string feed_version_;
  std::uint64_t loads_{0};
  std::uint64_t realtime_updates_{0};
  std::optional<epoch_t> realtime_at_;
};

/// Pulls a GTFS-realtime feed at a fixed interval and applies it. Failed
/// fetches or undecodable bytes leave the last applied delays in force.
class RealtimePoller {
public:
  using Source = std::function<std::string()>;

  RealtimePoller(RouterEngine& engine, Source source, std::chrono::milliseconds interval);
  ~RealtimePoller();

  RealtimePoller(RealtimePoller const&) = delete;
  RealtimePoller& operator=(RealtimePoller const&) = delete;

  void start();
  void stop();
  /// One synchronous pull; true when a feed was applied.
  bool poll_once();

  std::uint64_t applied() const;
  std::uint64_t failures() const;

  /// GET `url`, throwing on transport errors and non-200 replies.
  static Source http_source(std::string url);

private:
  RouterEngine& engine_;
  Source source_;
  std::chrono::milliseconds interval_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool stopping_{false};
  std::uint64_t applied_{0};
  std::uint64_t failures_{0};
  std::thread thread_;
};

}  // namespace atomic::router
