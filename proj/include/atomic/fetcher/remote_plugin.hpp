#pragma once

#include <string>

#include "atomic/fetcher/plugin.hpp"

namespace httplib {
class Server;
}

namespace atomic::fetcher {

/// Delivers feeds to a routing engine in another process:
/// POST {endpoint}/plugin/feeds/{feedId}, zip body, X-Feed-Version header.
/// Anything but 200 is a nack.
class RemotePlugin final : public RoutingEnginePlugin {
public:
  explicit RemotePlugin(std::string endpoint, int timeout_ms = 30000);

  void load_feed(FeedDelivery const& delivery) override;

private:
  std::string endpoint_;
  int timeout_ms_;
};

/// Serves the receiving end of RemotePlugin on `server`, forwarding parsed
/// feeds to `plugin`. Replies 400 for unreadable archives, 409 on a nack.
void mount_plugin_routes(httplib::Server& server, RoutingEnginePlugin& plugin);

}  // namespace atomic::fetcher
