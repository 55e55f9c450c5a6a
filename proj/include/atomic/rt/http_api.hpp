#pragma once

#include <memory>
#include <string>

namespace atomic::http {
class HttpServer;
}

namespace atomic::rt {

class Bridge;

/// GET  /gtfs-rt/trip-updates, /gtfs-rt/vehicle-positions  application/x-protobuf
/// GET  /gtfs-rt/debug   JSON rendering of the current feed
/// GET  /metrics         {notificationsApplied, skipped, malformed, evicted, lastRebuildEpoch}
/// POST /notify          NGSI notification callback
class BridgeHttpApi {
public:
  explicit BridgeHttpApi(std::shared_ptr<Bridge> bridge);
  ~BridgeHttpApi();

  int start(std::string const& host, int port);
  void stop();
  std::string base_url() const;
  std::string notify_url() const { return base_url() + "/notify"; }

private:
  std::shared_ptr<Bridge> bridge_;
  std::unique_ptr<http::HttpServer> server_;
};

}  // namespace atomic::rt
