#include "atomic/fetcher/remote_plugin.hpp"

#include "atomic/common/http_client.hpp"
#include "atomic/common/http_server.hpp"

namespace atomic::fetcher {

RemotePlugin::RemotePlugin(std::string endpoint, int timeout_ms)
    : endpoint_{std::move(endpoint)}, timeout_ms_{timeout_ms} {
  while (!endpoint_.empty() && endpoint_.back() == '/') {
    endpoint_.pop_back();
  }
}

void RemotePlugin::load_feed(FeedDelivery const& d) {
  http::Response res;
  try {
    res = http::post(endpoint_ + "/plugin/feeds/" + http::url_encode(d.feed_id), d.bytes, "application/zip",
                     {{"X-Feed-Version", d.version}}, timeout_ms_);
  } catch (http::TransportError const& e) {
    throw PluginError{e.what()};
  }
  if (res.status != 200) {
    throw PluginError{"plugin endpoint answered " + std::to_string(res.status) + ": " + res.body};
  }
}

void mount_plugin_routes(httplib::Server& server, RoutingEnginePlugin& plugin) {
  server.Post(R"(/plugin/feeds/([^/]+))", [&plugin](httplib::Request const& req, httplib::Response& res) {
    FeedDelivery d;
    d.feed_id = httplib::detail::decode_url(req.matches[1], false);
    d.version = req.get_header_value("X-Feed-Version");
    d.bytes = req.body;
    if (d.version.empty()) {
      http::reply_error(res, 400, "missing X-Feed-Version header");
      return;
    }
    try {
      d.feed = gtfs::read_feed(d.bytes);
    } catch (std::exception const& e) {
      http::reply_error(res, 400, e.what());
      return;
    }
    try {
      plugin.load_feed(d);
    } catch (std::exception const& e) {
      http::reply_error(res, 409, e.what());
      return;
    }
    http::reply_json(res, 200, nlohmann::json{{"feedId", d.feed_id}, {"version", d.version}}.dump());
  });
}

}  // namespace atomic::fetcher
