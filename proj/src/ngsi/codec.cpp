#include "atomic/ngsi/codec.hpp"

#include <charconv>
#include <sstream>

namespace atomic::ngsi {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(std::string const& what) { throw BrokerError{Errc::malformed_entity, what}; }
[[noreturn]] void bad_query(std::string const& what) { throw BrokerError{Errc::bad_query, what}; }

std::optional<double> parse_double(std::string_view s) {
  double d{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return d;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') {
    s.remove_prefix(1);
  }
  while (!s.empty() && s.back() == ' ') {
    s.remove_suffix(1);
  }
  return s;
}

/// Values in `q=` expressions: numbers, true/false, or (optionally quoted) text.
AttrValue parse_q_value(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    return std::string{s.substr(1, s.size() - 2)};
  }
  if (auto const d = parse_double(s)) {
    return *d;
  }
  if (s == "true") {
    return true;
  }
  if (s == "false") {
    return false;
  }
  return std::string{s};
}

std::string format_q_value(AttrValue const& v) {
  if (auto const* d = std::get_if<double>(&v)) {
    return format_double(*d);
  }
  if (auto const* b = std::get_if<bool>(&v)) {
    return *b ? "true" : "false";
  }
  if (auto const* s = std::get_if<std::string>(&v)) {
    return "'" + *s + "'";
  }
  throw BrokerError{Errc::bad_predicate, "predicate value has no query-string form"};
}

}  // namespace

std::string format_double(double d) {
  char buf[64];
  auto const [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string{buf, ptr};
}

GeoPoint parse_coords(std::string_view text) {
  auto const comma = text.find(',');
  if (comma == std::string_view::npos) {
    bad_query("coordinates must be 'lat,lon': " + std::string{text});
  }
  auto const lat = parse_double(trim(text.substr(0, comma)));
  auto const lon = parse_double(trim(text.substr(comma + 1)));
  if (!lat || !lon) {
    bad_query("coordinates must be numeric: " + std::string{text});
  }
  return GeoPoint{*lat, *lon};
}

std::string format_coords(GeoPoint const& p) { return format_double(p.lat) + "," + format_double(p.lon); }

json to_json(AttrValue const& v) {
  return std::visit(
      [](auto const& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GeoPoint>) {
          return format_coords(x);
        } else {
          return x;
        }
      },
      v);
}

json to_json(Attribute const& a) {
  auto j = json{{"type", std::string{value_kind(a.value)}}, {"value", to_json(a.value)}};
  j["metadata"] = json::object();
  if (a.observed_at) {
    j["metadata"]["observedAt"] = {{"type", "DateTime"}, {"value", to_iso8601(*a.observed_at)}};
  }
  return j;
}

Attribute attribute_from_json(json const& j) {
  Attribute a;
  if (!j.is_object() || !j.contains("value")) {
    // keyValues shorthand
    if (j.is_number()) {
      a.value = j.get<double>();
    } else if (j.is_string()) {
      a.value = j.get<std::string>();
    } else if (j.is_boolean()) {
      a.value = j.get<bool>();
    } else if (j.is_object() || j.is_array()) {
      a.value = j;
    } else {
      malformed("attribute value must not be null");
    }
    return a;
  }

  auto const type = j.value("type", std::string{});
  auto const& v = j.at("value");
  try {
    if (type == "geo:point") {
      a.value = parse_coords(v.get<std::string>());
    } else if (type == "Number" || (type.empty() && v.is_number())) {
      a.value = v.get<double>();
    } else if (type == "Boolean" || (type.empty() && v.is_boolean())) {
      a.value = v.get<bool>();
    } else if (type == "StructuredValue" || (type.empty() && (v.is_object() || v.is_array()))) {
      a.value = v;
    } else if (v.is_string()) {
      a.value = v.get<std::string>();
    } else {
      malformed("attribute type '" + type + "' does not match its value");
    }
  } catch (json::exception const& e) {
    malformed(std::string{"attribute value: "} + e.what());
  } catch (BrokerError const& e) {
    malformed(e.what());
  }

  if (auto const it = j.find("metadata"); it != j.end() && it->is_object()) {
    if (auto const obs = it->find("observedAt"); obs != it->end()) {
      try {
        auto const& raw = obs->is_object() ? obs->at("value") : *obs;
        a.observed_at = raw.is_number() ? raw.get<epoch_t>() : parse_iso8601(raw.get<std::string>());
      } catch (std::exception const& e) {
        malformed(std::string{"observedAt: "} + e.what());
      }
    }
  }
  return a;
}

json to_json(ContextEntity const& e) {
  auto j = json{{"id", e.id}, {"type", e.type}};
  for (auto const& [name, attr] : e.attributes) {
    j[name] = to_json(attr);
  }
  return j;
}

ContextEntity entity_from_json(json const& j) {
  if (!j.is_object()) {
    malformed("entity must be a JSON object");
  }
  ContextEntity e;
  auto const id = j.find("id");
  auto const type = j.find("type");
  if (id == j.end() || !id->is_string() || type == j.end() || !type->is_string()) {
    malformed("entity requires string id and type");
  }
  e.id = id->get<std::string>();
  e.type = type->get<std::string>();
  for (auto const& [name, value] : j.items()) {
    if (name != "id" && name != "type") {
      e.attributes.emplace(name, attribute_from_json(value));
    }
  }
  return e;
}

json to_json(Subscription const& s) {
  auto entity = json::object();
  entity["idPattern"] = s.id_pattern.empty() ? ".*" : s.id_pattern;
  if (!s.entity_type.empty()) {
    entity["type"] = s.entity_type;
  }
  auto condition = json{{"attrs", s.watched_attributes}};
  if (s.geo) {
    condition["expression"] = {{"georel", "near;maxDistance:" + format_double(s.geo->max_distance_meters)},
                               {"geometry", "point"},
                               {"coords", format_coords(s.geo->center)}};
  }
  auto j = json{{"subject", {{"entities", json::array({entity})}, {"condition", condition}}},
                {"notification", {{"http", {{"url", s.target.url}}}}}};
  if (!s.id.empty()) {
    j["id"] = s.id;
  }
  return j;
}

Subscription subscription_from_json(json const& j) {
  Subscription s;
  try {
    s.id = j.value("id", std::string{});
    auto const& subject = j.at("subject");
    auto const& entities = subject.at("entities");
    if (!entities.is_array() || entities.size() != 1) {
      throw BrokerError{Errc::bad_target, "subscription must name exactly one entity selector"};
    }
    auto const& sel = entities.front();
    s.entity_type = sel.value("type", std::string{});
    s.id_pattern = sel.value("idPattern", std::string{});
    if (s.id_pattern == ".*") {
      s.id_pattern.clear();
    }
    if (auto const cond = subject.find("condition"); cond != subject.end()) {
      for (auto const& a : cond->value("attrs", json::array())) {
        s.watched_attributes.insert(a.get<std::string>());
      }
      if (auto const expr = cond->find("expression"); expr != cond->end()) {
        auto params = std::map<std::string, std::string>{};
        for (auto const& key : {"georel", "geometry", "coords"}) {
          if (expr->contains(key)) {
            params[key] = expr->at(key).get<std::string>();
          }
        }
        s.geo = query_from_params(params).geo;
      }
    }
    s.target.url = j.at("notification").at("http").at("url").get<std::string>();
  } catch (json::exception const& e) {
    throw BrokerError{Errc::bad_target, std::string{"malformed subscription: "} + e.what()};
  }
  return s;
}

json to_json(Notification const& n) {
  auto data = json::array();
  for (auto const& e : n.data) {
    data.push_back(to_json(e));
  }
  return json{{"subscriptionId", n.subscription_id}, {"emittedAt", to_iso8601(n.emitted_at)}, {"data", data}};
}

Notification notification_from_json(json const& j) {
  Notification n;
  try {
    n.subscription_id = j.at("subscriptionId").get<std::string>();
    if (auto const it = j.find("emittedAt"); it != j.end()) {
      n.emitted_at = parse_iso8601(it->get<std::string>());
    }
    for (auto const& e : j.at("data")) {
      n.data.push_back(entity_from_json(e));
    }
  } catch (json::exception const& e) {
    malformed(std::string{"malformed notification: "} + e.what());
  } catch (TimeFormatError const& e) {
    malformed(std::string{"malformed notification: "} + e.what());
  }
  return n;
}

json to_json(HistoricalRecord const& r) {
  return json{{"entityId", r.entity_id},
              {"attrName", r.attr_name},
              {"type", std::string{value_kind(r.value)}},
              {"value", to_json(r.value)},
              {"observedAt", to_iso8601(r.observed_at)}};
}

HistoricalRecord history_from_json(json const& j) {
  HistoricalRecord r;
  r.entity_id = j.at("entityId").get<std::string>();
  r.attr_name = j.at("attrName").get<std::string>();
  r.value = attribute_from_json(json{{"type", j.at("type")}, {"value", j.at("value")}}).value;
  r.observed_at = parse_iso8601(j.at("observedAt").get<std::string>());
  return r;
}

std::map<std::string, std::string> to_params(EntityQuery const& q) {
  std::map<std::string, std::string> p;
  if (q.type) {
    p["type"] = *q.type;
  }
  if (q.id_pattern) {
    p["idPattern"] = *q.id_pattern;
  }
  if (!q.predicates.empty()) {
    std::string expr;
    for (auto const& pred : q.predicates) {
      if (!expr.empty()) {
        expr += ';';
      }
      auto const op = pred.op == AttrPredicate::Op::eq ? "==" : pred.op == AttrPredicate::Op::lt ? "<" : ">";
      expr += pred.attr + op + format_q_value(pred.value);
    }
    p["q"] = expr;
  }
  if (q.geo) {
    p["georel"] = "near;maxDistance:" + format_double(q.geo->max_distance_meters);
    p["geometry"] = "point";
    p["coords"] = format_coords(q.geo->center);
  }
  return p;
}

EntityQuery query_from_params(std::map<std::string, std::string> const& params) {
  EntityQuery q;
  if (auto const it = params.find("type"); it != end(params)) {
    q.type = it->second;
  }
  if (auto const it = params.find("idPattern"); it != end(params)) {
    q.id_pattern = it->second;
  }
  if (auto const it = params.find("q"); it != end(params)) {
    std::stringstream ss{it->second};
    std::string term;
    while (std::getline(ss, term, ';')) {
      if (term.empty()) {
        continue;
      }
      AttrPredicate p;
      std::size_t pos{};
      std::size_t len{};
      if ((pos = term.find("==")) != std::string::npos) {
        p.op = AttrPredicate::Op::eq;
        len = 2;
      } else if ((pos = term.find('<')) != std::string::npos) {
        p.op = AttrPredicate::Op::lt;
        len = 1;
      } else if ((pos = term.find('>')) != std::string::npos) {
        p.op = AttrPredicate::Op::gt;
        len = 1;
      } else {
        bad_query("unsupported q term: " + term);
      }
      p.attr = term.substr(0, pos);
      if (p.attr.empty()) {
        bad_query("q term without attribute: " + term);
      }
      p.value = parse_q_value(std::string_view{term}.substr(pos + len));
      q.predicates.push_back(std::move(p));
    }
  }

  auto const georel = params.find("georel");
  auto const coords = params.find("coords");
  if (georel != end(params) || coords != end(params)) {
    if (georel == end(params) || coords == end(params)) {
      bad_query("georel and coords must be given together");
    }
    if (auto const g = params.find("geometry"); g != end(params) && g->second != "point") {
      bad_query("only geometry=point is supported");
    }
    constexpr std::string_view kNear = "near;maxDistance:";
    if (!georel->second.starts_with(kNear)) {
      bad_query("only georel=near;maxDistance:N is supported");
    }
    auto const dist = parse_double(std::string_view{georel->second}.substr(kNear.size()));
    if (!dist || !(*dist > 0.0)) {
      bad_query("maxDistance must be a positive number");
    }
    q.geo = GeoFilter{parse_coords(coords->second), *dist};
  }
  return q;
}

}  // namespace atomic::ngsi
