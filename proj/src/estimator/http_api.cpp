#include "atomic/estimator/http_api.hpp"

#include "atomic/common/http_server.hpp"
#include "atomic/estimator/service.hpp"

namespace atomic::estimator {

EstimatorHttpApi::EstimatorHttpApi(std::shared_ptr<EstimatorService> service)
    : service_{std::move(service)}, server_{std::make_unique<http::HttpServer>()} {
  auto& srv = server_->routes();
  auto* s = service_.get();

  srv.Get("/predictions", [s](httplib::Request const& req, httplib::Response& res) {
    if (!req.has_param("entityId") || !req.has_param("attr")) {
      http::reply_error(res, 400, "entityId and attr are required");
      return;
    }
    try {
      auto const served = s->serve(req.get_param_value("entityId"), req.get_param_value("attr"));
      auto body = to_json(served.prediction);
      body["source"] = served.recomputed ? "recomputed" : "cache";
      http::reply_json(res, 200, body.dump());
    } catch (UnknownTarget const& e) {
      http::reply_error(res, 404, e.what());
    } catch (Unavailable const& e) {
      http::reply_error(res, 503, e.what());
    }
  });
  srv.Get(R"(/predictions/([^/]+)/history)", [s](httplib::Request const& req, httplib::Response& res) {
    try {
      http::reply_json(res, 200, s->history(httplib::detail::decode_url(req.matches[1], false)).dump());
    } catch (UnknownTarget const& e) {
      http::reply_error(res, 404, e.what());
    } catch (ngsi::BrokerError const& e) {
      http::reply_error(res, 503, e.what());
    }
  });
  srv.Get("/events", [s](httplib::Request const&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (auto const& r : s->log().records()) {
      out.push_back(to_json(r));
    }
    http::reply_json(res, 200, out.dump());
  });
  srv.Get("/status", [s](httplib::Request const&, httplib::Response& res) {
    http::reply_json(res, 200, s->status_json().dump());
  });
}

EstimatorHttpApi::~EstimatorHttpApi() { stop(); }

int EstimatorHttpApi::start(std::string const& host, int port) { return server_->start(host, port); }

void EstimatorHttpApi::stop() { server_->stop(); }

std::string EstimatorHttpApi::base_url() const { return server_->base_url(); }

}  // namespace atomic::estimator
