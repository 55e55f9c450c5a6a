#pragma once

#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomic/ngsi/entity.hpp"

namespace atomic::ngsi {

enum class Errc {
  malformed_entity,
  id_type_conflict,
  bad_predicate,
  bad_query,
  bad_target,
  unknown_entity,
  unknown_subscription,
  unavailable,
};

std::string_view to_string(Errc);

class BrokerError : public std::runtime_error {
public:
  BrokerError(Errc code, std::string const& what) : std::runtime_error{what}, code_{code} {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

enum class UpsertResult { created, updated };

struct AttrPredicate {
  enum class Op { eq, lt, gt };
  std::string attr;
  Op op{Op::eq};
  AttrValue value;
};

struct GeoFilter {
  GeoPoint center;
  double max_distance_meters{0.0};
};

struct EntityQuery {
  std::optional<std::string> type;
  std::optional<std::string> id_pattern;
  std::vector<AttrPredicate> predicates;
  std::optional<GeoFilter> geo;

  bool empty() const { return !type && !id_pattern && predicates.empty() && !geo; }
};

struct Notification {
  std::string subscription_id;
  epoch_t emitted_at{0};
  std::vector<ContextEntity> data;
};

using NotificationSink = std::function<void(Notification const&)>;

/// Exactly one of `url` and `sink` is set.
struct NotifyTarget {
  std::string url;
  NotificationSink sink;
};

struct Subscription {
  std::string id;
  std::string entity_type;  // empty matches any type
  std::string id_pattern;   // empty matches any id
  std::set<std::string> watched_attributes;  // empty watches all
  std::optional<GeoFilter> geo;
  NotifyTarget target;
};

struct HistoricalRecord {
  std::string entity_id;
  std::string attr_name;
  AttrValue value;
  epoch_t observed_at{0};

  friend bool operator==(HistoricalRecord const&, HistoricalRecord const&) = default;
};

/// Type / id-pattern / geo part of a filter, shared by queries and subscriptions.
bool matches_scope(ContextEntity const& e, std::string_view type, std::string_view id_pattern,
                   std::optional<GeoFilter> const& geo);

/// Throws BrokerError(bad_predicate) when the predicate cannot be evaluated.
bool matches_predicate(ContextEntity const& e, AttrPredicate const& p);

}  // namespace atomic::ngsi
