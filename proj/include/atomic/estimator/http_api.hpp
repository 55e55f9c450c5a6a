#pragma once

#include <memory>
#include <string>

namespace atomic::http {
class HttpServer;
}

namespace atomic::estimator {

class EstimatorService;

/// GET /predictions?entityId=&attr=        latest prediction
/// GET /predictions/{entityId}/history     past predictions
/// GET /events                             event log
/// GET /status
class EstimatorHttpApi {
public:
  explicit EstimatorHttpApi(std::shared_ptr<EstimatorService> service);
  ~EstimatorHttpApi();

  int start(std::string const& host, int port);
  void stop();
  std::string base_url() const;

private:
  std::shared_ptr<EstimatorService> service_;
  std::unique_ptr<http::HttpServer> server_;
};

}  // namespace atomic::estimator
