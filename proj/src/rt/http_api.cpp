#include "atomic/rt/http_api.hpp"

#include "atomic/common/http_server.hpp"
#include "atomic/ngsi/codec.hpp"
#include "atomic/rt/bridge.hpp"

namespace atomic::rt {

namespace {

constexpr char const* kProtobuf = "application/x-protobuf";

}  // namespace

BridgeHttpApi::BridgeHttpApi(std::shared_ptr<Bridge> bridge)
    : bridge_{std::move(bridge)}, server_{std::make_unique<http::HttpServer>()} {
  auto& srv = server_->routes();
  auto* b = bridge_.get();

  srv.Get("/gtfs-rt/trip-updates", [b](httplib::Request const&, httplib::Response& res) {
    res.set_content(b->snapshot()->trip_updates, kProtobuf);
  });
  srv.Get("/gtfs-rt/vehicle-positions", [b](httplib::Request const&, httplib::Response& res) {
    res.set_content(b->snapshot()->vehicle_positions, kProtobuf);
  });
  srv.Get("/gtfs-rt/debug", [b](httplib::Request const&, httplib::Response& res) {
    auto const snap = b->snapshot();
    auto body = to_json(snap->feed);
    body["metrics"] = b->metrics_json();
    http::reply_json(res, 200, body.dump());
  });
  srv.Get("/metrics", [b](httplib::Request const&, httplib::Response& res) {
    http::reply_json(res, 200, b->metrics_json().dump());
  });
  srv.Post("/notify", [b](httplib::Request const& req, httplib::Response& res) {
    ngsi::Notification n;
    try {
      n = ngsi::notification_from_json(nlohmann::json::parse(req.body));
    } catch (std::exception const& e) {
      http::reply_error(res, 400, std::string{"malformed notification: "} + e.what());
      return;
    }
    b->on_notification(n);
    res.status = 204;
  });
}

BridgeHttpApi::~BridgeHttpApi() { stop(); }

int BridgeHttpApi::start(std::string const& host, int port) { return server_->start(host, port); }

void BridgeHttpApi::stop() { server_->stop(); }

std::string BridgeHttpApi::base_url() const { return server_->base_url(); }

}  // namespace atomic::rt
