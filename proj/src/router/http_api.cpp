#include "atomic/router/http_api.hpp"

#include "atomic/common/http_server.hpp"
#include "atomic/fetcher/remote_plugin.hpp"
#include "atomic/router/engine.hpp"

namespace atomic::router {

RouterHttpApi::RouterHttpApi(std::shared_ptr<RouterEngine> engine)
    : engine_{std::move(engine)}, server_{std::make_unique<http::HttpServer>()} {
  auto& srv = server_->routes();
  auto* e = engine_.get();

  fetcher::mount_plugin_routes(srv, *e);
  srv.Post("/plugin/realtime", [e](httplib::Request const& req, httplib::Response& res) {
    rt::FeedMessage msg;
    try {
      msg = rt::decode(req.body);
    } catch (std::exception const& ex) {
      http::reply_error(res, 400, std::string{"undecodable GTFS-realtime: "} + ex.what());
      return;
    }
    e->apply_realtime(msg);
    http::reply_json(res, 200, nlohmann::json{{"entities", msg.entities.size()}}.dump());
  });
  srv.Get("/route", [e](httplib::Request const& req, httplib::Response& res) {
    if (!req.has_param("from") || !req.has_param("to") || !req.has_param("departAfter")) {
      http::reply_error(res, 400, "from, to and departAfter are required");
      return;
    }
    auto const from = req.get_param_value("from");
    auto const to = req.get_param_value("to");
    epoch_t depart_after = 0;
    try {
      depart_after = parse_iso8601(req.get_param_value("departAfter"));
    } catch (std::exception const& ex) {
      http::reply_error(res, 400, ex.what());
      return;
    }
    std::optional<Journey> j;
    try {
      j = e->route(from, to, depart_after);
    } catch (NoFeedLoaded const& ex) {
      http::reply_error(res, 503, ex.what());
      return;
    } catch (UnknownStop const& ex) {
      http::reply_error(res, 404, ex.what());
      return;
    }
    nlohmann::json body{{"from", from}, {"to", to}, {"departAfter", to_iso8601(depart_after)}, {"found", j.has_value()}};
    if (j) {
      body.update(to_json(*j));
    }
    http::reply_json(res, 200, body.dump());
  });
  srv.Get("/status", [e](httplib::Request const&, httplib::Response& res) {
    http::reply_json(res, 200, e->status_json().dump());
  });
}

RouterHttpApi::~RouterHttpApi() { stop(); }

int RouterHttpApi::start(std::string const& host, int port) { return server_->start(host, port); }

void RouterHttpApi::stop() { server_->stop(); }

std::string RouterHttpApi::base_url() const { return server_->base_url(); }

}  // namespace atomic::router
