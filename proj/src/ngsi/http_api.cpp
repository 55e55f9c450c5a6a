#include "atomic/ngsi/http_api.hpp"

#include <charconv>

#include "atomic/common/http_server.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi/codec.hpp"

namespace atomic::ngsi {

using nlohmann::json;

namespace {

int status_of(Errc c) {
  switch (c) {
    case Errc::unknown_entity:
    case Errc::unknown_subscription: return 404;
    case Errc::id_type_conflict: return 422;
    case Errc::unavailable: return 503;
    default: return 400;
  }
}

void reply_broker_error(httplib::Response& res, BrokerError const& e) {
  http::reply_json(res, status_of(e.code()),
                   json{{"error", std::string{to_string(e.code())}}, {"description", e.what()}}.dump());
}

/// Runs a handler, translating broker and parse errors into JSON error replies.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (BrokerError const& e) {
    reply_broker_error(res, e);
  } catch (json::exception const& e) {
    reply_broker_error(res, BrokerError{Errc::malformed_entity, e.what()});
  } catch (TimeFormatError const& e) {
    reply_broker_error(res, BrokerError{Errc::bad_query, e.what()});
  }
}

epoch_t parse_time_param(std::string const& s) {
  epoch_t t{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
  if (ec == std::errc{} && ptr == s.data() + s.size()) {
    return t;
  }
  return parse_iso8601(s);
}

}  // namespace

BrokerHttpApi::BrokerHttpApi(std::shared_ptr<Broker> broker)
    : broker_{std::move(broker)}, server_{std::make_unique<http::HttpServer>()} {
  auto& srv = server_->routes();
  auto broker_ptr = broker_.get();

  srv.Get("/version", [](httplib::Request const&, httplib::Response& res) {
    http::reply_json(res, 200, json{{"service", "atomic-ngsi-broker"}, {"version", "1"}}.dump());
  });

  srv.Get("/stats", [broker_ptr](httplib::Request const&, httplib::Response& res) {
    auto const s = broker_ptr->stats();
    http::reply_json(res, 200,
                     json{{"entities", s.entities},
                          {"subscriptions", s.subscriptions},
                          {"upserts", s.upserts},
                          {"notificationsDelivered", s.notifications_delivered},
                          {"deliveryFailures", s.delivery_failures}}
                         .dump());
  });

  srv.Get("/v2/entities", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      std::map<std::string, std::string> params;
      for (auto const& [k, v] : req.params) {
        params[k] = v;
      }
      auto out = json::array();
      for (auto const& e : broker_ptr->query(query_from_params(params))) {
        out.push_back(to_json(e));
      }
      http::reply_json(res, 200, out.dump());
    });
  });

  srv.Get(R"(/v2/entities/([^/]+))", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      auto const id = req.matches[1].str();
      if (auto const e = broker_ptr->get(id)) {
        http::reply_json(res, 200, to_json(*e).dump());
      } else {
        throw BrokerError{Errc::unknown_entity, "unknown entity " + id};
      }
    });
  });

  srv.Post("/v2/entities", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      auto const r = broker_ptr->upsert(entity_from_json(json::parse(req.body)));
      res.status = r == UpsertResult::created ? 201 : 204;
    });
  });

  srv.Patch(R"(/v2/entities/([^/]+)/attrs)", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      auto const body = json::parse(req.body);
      if (!body.is_object()) {
        throw BrokerError{Errc::malformed_entity, "attribute patch must be a JSON object"};
      }
      std::map<std::string, Attribute> attrs;
      for (auto const& [name, value] : body.items()) {
        attrs.emplace(name, attribute_from_json(value));
      }
      broker_ptr->patch_attributes(req.matches[1].str(), attrs);
      res.status = 204;
    });
  });

  srv.Get("/v2/subscriptions", [broker_ptr](httplib::Request const&, httplib::Response& res) {
    guarded(res, [&] {
      auto out = json::array();
      for (auto const& s : broker_ptr->subscriptions()) {
        if (!s.target.url.empty()) {
          out.push_back(to_json(s));
        } else {
          auto j = to_json(s);
          j["notification"]["http"]["url"] = "inproc:" + s.id;
          out.push_back(j);
        }
      }
      http::reply_json(res, 200, out.dump());
    });
  });

  srv.Post("/v2/subscriptions", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      auto const id = broker_ptr->subscribe(subscription_from_json(json::parse(req.body)));
      res.set_header("Location", "/v2/subscriptions/" + id);
      http::reply_json(res, 201, json{{"id", id}}.dump());
    });
  });

  srv.Delete(R"(/v2/subscriptions/([^/]+))", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      broker_ptr->unsubscribe(req.matches[1].str());
      res.status = 204;
    });
  });

  srv.Get("/v2/history", [broker_ptr](httplib::Request const& req, httplib::Response& res) {
    guarded(res, [&] {
      for (auto const* key : {"entityId", "attr", "from", "to"}) {
        if (!req.has_param(key)) {
          throw BrokerError{Errc::bad_query, std::string{"missing parameter "} + key};
        }
      }
      auto out = json::array();
      for (auto const& r : broker_ptr->query_history(req.get_param_value("entityId"), req.get_param_value("attr"),
                                                     parse_time_param(req.get_param_value("from")),
                                                     parse_time_param(req.get_param_value("to")))) {
        out.push_back(to_json(r));
      }
      http::reply_json(res, 200, out.dump());
    });
  });
}

BrokerHttpApi::~BrokerHttpApi() { stop(); }

int BrokerHttpApi::start(std::string const& host, int port) { return server_->start(host, port); }

void BrokerHttpApi::stop() { server_->stop(); }

std::string BrokerHttpApi::base_url() const { return server_->base_url(); }

}  // namespace atomic::ngsi
