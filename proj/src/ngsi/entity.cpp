#include "atomic/ngsi/entity.hpp"

#include <cmath>
#include <numbers>

namespace atomic::ngsi {

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

ContextEntity& ContextEntity::set(std::string const& name, AttrValue value, std::optional<epoch_t> observed_at) {
  attributes[name] = Attribute{std::move(value), observed_at};
  return *this;
}

namespace {

template <typename T>
std::optional<T> get_as(std::map<std::string, Attribute> const& attrs, std::string const& name) {
  auto const it = attrs.find(name);
  if (it == end(attrs)) {
    return std::nullopt;
  }
  if (auto const* v = std::get_if<T>(&it->second.value)) {
    return *v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> ContextEntity::number(std::string const& name) const { return get_as<double>(attributes, name); }

std::optional<std::string> ContextEntity::text(std::string const& name) const {
  return get_as<std::string>(attributes, name);
}

std::optional<bool> ContextEntity::boolean(std::string const& name) const { return get_as<bool>(attributes, name); }

std::optional<GeoPoint> ContextEntity::geo(std::string const& name) const {
  return get_as<GeoPoint>(attributes, name);
}

std::string check_entity(ContextEntity const& e) {
  if (e.id.empty()) {
    return "entity id is empty";
  }
  if (e.type.empty()) {
    return "entity type is empty for " + e.id;
  }
  for (auto const& [name, attr] : e.attributes) {
    if (name.empty()) {
      return "empty attribute name on " + e.id;
    }
    if (name == "id" || name == "type") {
      return "reserved attribute name '" + name + "' on " + e.id;
    }
    if (auto const* g = std::get_if<GeoPoint>(&attr.value); g != nullptr && !g->valid()) {
      return "attribute " + name + " on " + e.id + " is not a valid geo-point";
    }
    if (auto const* d = std::get_if<double>(&attr.value); d != nullptr && !std::isfinite(*d)) {
      return "attribute " + name + " on " + e.id + " is not finite";
    }
    if (auto const* j = std::get_if<nlohmann::json>(&attr.value);
        j != nullptr && !j->is_object() && !j->is_array()) {
      return "structured attribute " + name + " on " + e.id + " must be an object or array";
    }
  }
  return {};
}

double haversine_meters(GeoPoint const& a, GeoPoint const& b) {
  constexpr auto kEarthRadius = 6'371'000.0;
  constexpr auto kRad = std::numbers::pi / 180.0;
  auto const dlat = (b.lat - a.lat) * kRad;
  auto const dlon = (b.lon - a.lon) * kRad;
  auto const s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                 std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(s)));
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') {
    ++p;
  }
  return p == pattern.size();
}

std::string_view value_kind(AttrValue const& v) {
  switch (v.index()) {
    case 0: return "Number";
    case 1: return "Text";
    case 2: return "Boolean";
    case 3: return "geo:point";
    default: return "StructuredValue";
  }
}

}  // namespace atomic::ngsi
