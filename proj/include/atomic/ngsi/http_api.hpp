#pragma once

#include <memory>
#include <string>

namespace atomic::http {
class HttpServer;
}

namespace atomic::ngsi {

class Broker;

/// Serves a broker over the NGSIv2-style HTTP JSON API:
///   GET/POST /v2/entities, GET /v2/entities/{id}, PATCH /v2/entities/{id}/attrs,
///   GET/POST /v2/subscriptions, DELETE /v2/subscriptions/{id},
///   GET /v2/history?entityId&attr&from&to, GET /version, GET /stats.
class BrokerHttpApi {
public:
  explicit BrokerHttpApi(std::shared_ptr<Broker> broker);
  ~BrokerHttpApi();

  int start(std::string const& host, int port);
  void stop();
  std::string base_url() const;

private:
  std::shared_ptr<Broker> broker_;
  std::unique_ptr<http::HttpServer> server_;
};

}  // namespace atomic::ngsi
