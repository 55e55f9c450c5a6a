#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "json.hpp"

#include "atomic/common/time.hpp"

namespace atomic::ngsi {

struct GeoPoint {
  double lat{0.0};
  double lon{0.0};

  bool valid() const;
  friend bool operator==(GeoPoint const&, GeoPoint const&) = default;
};

/// Structured values are JSON objects or arrays.
using AttrValue = std::variant<double, std::string, bool, GeoPoint, nlohmann::json>;

struct Attribute {
  AttrValue value;
  std::optional<epoch_t> observed_at;

  friend bool operator==(Attribute const&, Attribute const&) = default;
};

/// NGSI-style typed entity. Attribute names are unique by construction.
struct ContextEntity {
  std::string id;
  std::string type;
  std::map<std::string, Attribute> attributes;

  ContextEntity& set(std::string const& name, AttrValue value, std::optional<epoch_t> observed_at = std::nullopt);

  bool has(std::string const& name) const { return attributes.contains(name); }
  std::optional<double> number(std::string const& name) const;
  std::optional<std::string> text(std::string const& name) const;
  std::optional<bool> boolean(std::string const& name) const;
  std::optional<GeoPoint> geo(std::string const& name) const;

  friend bool operator==(ContextEntity const&, ContextEntity const&) = default;
};

/// Name of the attribute geo filters look at.
inline constexpr char kLocationAttr[] = "location";

/// Empty string when the entity is well-formed, else the first violation.
std::string check_entity(ContextEntity const& e);

/// Great-circle distance on a sphere of radius 6,371,000 m.
double haversine_meters(GeoPoint const& a, GeoPoint const& b);

/// Glob match with `*` (any run) and `?` (any single character).
bool glob_match(std::string_view pattern, std::string_view text);

std::string_view value_kind(AttrValue const& v);

}  // namespace atomic::ngsi
