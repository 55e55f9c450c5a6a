#include "atomic/ngsi/client.hpp"

#include "atomic/common/http_client.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi/codec.hpp"

namespace atomic::ngsi {

using nlohmann::json;

void LocalBrokerClient::check() const {
  if (!available_) {
    throw BrokerError{Errc::unavailable, "broker unavailable"};
  }
}

UpsertResult LocalBrokerClient::upsert(ContextEntity const& e) {
  check();
  return broker_->upsert(e);
}

std::optional<ContextEntity> LocalBrokerClient::get(std::string const& id) {
  check();
  return broker_->get(id);
}

std::vector<ContextEntity> LocalBrokerClient::query(EntityQuery const& q) {
  check();
  return broker_->query(q);
}

std::string LocalBrokerClient::subscribe(Subscription const& s) {
  check();
  return broker_->subscribe(s);
}

void LocalBrokerClient::unsubscribe(std::string const& id) {
  check();
  broker_->unsubscribe(id);
}

std::vector<Subscription> LocalBrokerClient::subscriptions() {
  check();
  return broker_->subscriptions();
}

std::vector<HistoricalRecord> LocalBrokerClient::history(std::string const& entity_id, std::string const& attr,
                                                         epoch_t from, epoch_t to) {
  check();
  return broker_->query_history(entity_id, attr, from, to);
}

namespace {

/// Maps an error response back onto the broker's error codes.
[[noreturn]] void raise(http::Response const& res) {
  auto code = Errc::unavailable;
  auto message = res.body;
  auto const j = json::parse(res.body, nullptr, false);
  if (!j.is_discarded() && j.is_object()) {
    message = j.value("description", message);
    auto const name = j.value("error", std::string{});
    for (auto c : {Errc::malformed_entity, Errc::id_type_conflict, Errc::bad_predicate, Errc::bad_query,
                   Errc::bad_target, Errc::unknown_entity, Errc::unknown_subscription}) {
      if (name == to_string(c)) {
        code = c;
      }
    }
  }
  throw BrokerError{code, "broker replied " + std::to_string(res.status) + ": " + message};
}

template <typename Fn>
http::Response call(Fn&& fn) {
  try {
    return fn();
  } catch (http::TransportError const& e) {
    throw BrokerError{Errc::unavailable, e.what()};
  }
}

}  // namespace

HttpBrokerClient::HttpBrokerClient(std::string base_url, int timeout_ms)
    : base_url_{std::move(base_url)}, timeout_ms_{timeout_ms} {
  while (!base_url_.empty() && base_url_.back() == '/') {
    base_url_.pop_back();
  }
  http::Url::parse(base_url_);
}

UpsertResult HttpBrokerClient::upsert(ContextEntity const& e) {
  auto const res = call([&] {
    return http::post(base_url_ + "/v2/entities", to_json(e).dump(), "application/json", {}, timeout_ms_);
  });
  if (res.status == 201) {
    return UpsertResult::created;
  }
  if (res.status == 204 || res.status == 200) {
    return UpsertResult::updated;
  }
  raise(res);
}

std::optional<ContextEntity> HttpBrokerClient::get(std::string const& id) {
  auto const res =
      call([&] { return http::get(base_url_ + "/v2/entities/" + http::url_encode(id), timeout_ms_); });
  if (res.status == 404) {
    return std::nullopt;
  }
  if (res.status != 200) {
    raise(res);
  }
  return entity_from_json(json::parse(res.body));
}

std::vector<ContextEntity> HttpBrokerClient::query(EntityQuery const& q) {
  auto const url = http::with_query(base_url_ + "/v2/entities", to_params(q));
  auto const res = call([&] { return http::get(url, timeout_ms_); });
  if (res.status != 200) {
    raise(res);
  }
  std::vector<ContextEntity> out;
  for (auto const& e : json::parse(res.body)) {
    out.push_back(entity_from_json(e));
  }
  return out;
}

std::string HttpBrokerClient::subscribe(Subscription const& s) {
  if (s.target.url.empty()) {
    throw BrokerError{Errc::bad_target, "remote subscriptions need a callback URL"};
  }
  auto const res = call([&] {
    return http::post(base_url_ + "/v2/subscriptions", to_json(s).dump(), "application/json", {}, timeout_ms_);
  });
  if (res.status != 201) {
    raise(res);
  }
  return json::parse(res.body).at("id").get<std::string>();
}

void HttpBrokerClient::unsubscribe(std::string const& id) {
  auto const res =
      call([&] { return http::del(base_url_ + "/v2/subscriptions/" + http::url_encode(id), timeout_ms_); });
  if (res.status != 204) {
    raise(res);
  }
}

std::vector<Subscription> HttpBrokerClient::subscriptions() {
  auto const res = call([&] { return http::get(base_url_ + "/v2/subscriptions", timeout_ms_); });
  if (res.status != 200) {
    raise(res);
  }
  std::vector<Subscription> out;
  for (auto const& s : json::parse(res.body)) {
    out.push_back(subscription_from_json(s));
  }
  return out;
}

std::vector<HistoricalRecord> HttpBrokerClient::history(std::string const& entity_id, std::string const& attr,
                                                        epoch_t from, epoch_t to) {
  auto const url = http::with_query(
      base_url_ + "/v2/history",
      {{"entityId", entity_id}, {"attr", attr}, {"from", to_iso8601(from)}, {"to", to_iso8601(to)}});
  auto const res = call([&] { return http::get(url, timeout_ms_); });
  if (res.status != 200) {
    raise(res);
  }
  std::vector<HistoricalRecord> out;
  for (auto const& r : json::parse(res.body)) {
    out.push_back(history_from_json(r));
  }
  return out;
}

bool HttpBrokerClient::ping() {
  try {
    return http::get(base_url_ + "/version", std::min(timeout_ms_, 1000)).status == 200;
  } catch (http::TransportError const&) {
    return false;
  }
}

std::unique_ptr<BrokerClient> connect(std::string const& url) {
  try {
    return std::make_unique<HttpBrokerClient>(url);
  } catch (std::invalid_argument const& e) {
    throw BrokerError{Errc::unavailable, e.what()};
  }
}

}  // namespace atomic::ngsi
