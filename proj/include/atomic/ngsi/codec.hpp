#pragma once

#include <map>
#include <string>

#include "json.hpp"

#include "atomic/ngsi/types.hpp"

namespace atomic::ngsi {

// NGSIv2-flavoured JSON. Attributes are {"type", "value", "metadata"} with
// observedAt carried as ISO-8601 metadata; geo-points are "lat,lon" strings.

nlohmann::json to_json(ContextEntity const& e);
/// Throws BrokerError(malformed_entity).
ContextEntity entity_from_json(nlohmann::json const& j);

nlohmann::json to_json(Attribute const& a);
Attribute attribute_from_json(nlohmann::json const& j);

nlohmann::json to_json(AttrValue const& v);

/// URL targets only; in-process sinks have no wire form.
nlohmann::json to_json(Subscription const& s);
Subscription subscription_from_json(nlohmann::json const& j);

nlohmann::json to_json(Notification const& n);
Notification notification_from_json(nlohmann::json const& j);

nlohmann::json to_json(HistoricalRecord const& r);
HistoricalRecord history_from_json(nlohmann::json const& j);

/// Query-string parameters (type, idPattern, q, georel, geometry, coords).
std::map<std::string, std::string> to_params(EntityQuery const& q);
/// Throws BrokerError(bad_query) on malformed parameters.
EntityQuery query_from_params(std::map<std::string, std::string> const& params);

/// "43.462,-3.81" -> GeoPoint; throws BrokerError(bad_query).
GeoPoint parse_coords(std::string_view text);
std::string format_coords(GeoPoint const& p);

/// Shortest representation that parses back to the same double.
std::string format_double(double d);

}  // namespace atomic::ngsi
