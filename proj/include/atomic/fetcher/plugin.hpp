#pragma once

#include <stdexcept>
#include <string>

#include "atomic/gtfs/feed.hpp"
#include "atomic/rt/feed.hpp"

namespace atomic::fetcher {

/// A feed handed to a routing engine. `bytes` is the archive exactly as
/// fetched; `feed` is its parse.
struct FeedDelivery {
  std::string feed_id;
  std::string version;
  std::string bytes;
  gtfs::GtfsFeed feed;
};

/// Thrown by plugins that cannot take a delivery.
struct PluginError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The routing engine side of the fetcher. load_feed must be idempotent per
/// (feed_id, version); throwing PluginError is a nack.
class RoutingEnginePlugin {
public:
  virtual ~RoutingEnginePlugin() = default;

  virtual void load_feed(FeedDelivery const& delivery) = 0;

  virtual bool supports_realtime() const { return false; }
  virtual void apply_realtime(rt::FeedMessage const&) { throw PluginError{"realtime updates not supported"}; }
};

}  // namespace atomic::fetcher
