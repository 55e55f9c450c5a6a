#pragma once

#include <memory>
#include <string>

namespace atomic::http {
class HttpServer;
}

namespace atomic::router {

class RouterEngine;

/// POST /plugin/feeds/{feedId}  zip body, X-Feed-Version header
/// POST /plugin/realtime        application/x-protobuf GTFS-realtime
/// GET  /route?from=&to=&departAfter=ISO8601
/// GET  /status
class RouterHttpApi {
public:
  explicit RouterHttpApi(std::shared_ptr<RouterEngine> engine);
  ~RouterHttpApi();

  int start(std::string const& host, int port);
  void stop();
  std::string base_url() const;

private:
  std::shared_ptr<RouterEngine> engine_;
  std::unique_ptr<http::HttpServer> server_;
};

}  // namespace atomic::router
