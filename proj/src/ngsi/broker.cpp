#include "atomic/ngsi/broker.hpp"

#include <algorithm>

#include "atomic/common/http_client.hpp"
#include "atomic/ngsi/codec.hpp"

namespace atomic::ngsi {

std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::malformed_entity: return "MalformedEntity";
    case Errc::id_type_conflict: return "IdTypeConflict";
    case Errc::bad_predicate: return "BadPredicate";
    case Errc::bad_query: return "BadQuery";
    case Errc::bad_target: return "BadTarget";
    case Errc::unknown_entity: return "UnknownEntity";
    case Errc::unknown_subscription: return "UnknownSubscription";
    case Errc::unavailable: return "BrokerUnavailable";
  }
  return "?";
}

bool matches_scope(ContextEntity const& e, std::string_view type, std::string_view id_pattern,
                   std::optional<GeoFilter> const& geo) {
  if (!type.empty() && e.type != type) {
    return false;
  }
  if (!id_pattern.empty() && !glob_match(id_pattern, e.id)) {
    return false;
  }
  if (geo) {
    auto const loc = e.geo(kLocationAttr);
    if (!loc || haversine_meters(*loc, geo->center) > geo->max_distance_meters) {
      return false;
    }
  }
  return true;
}

namespace {

bool comparable(AttrValue const& v) {
  return std::holds_alternative<double>(v) || std::holds_alternative<std::string>(v);
}

void check_predicate(AttrPredicate const& p) {
  if (p.op != AttrPredicate::Op::eq && !comparable(p.value)) {
    throw BrokerError{Errc::bad_predicate,
                      "ordering comparison on non-comparable " + std::string{value_kind(p.value)} + " value"};
  }
}

}  // namespace

bool matches_predicate(ContextEntity const& e, AttrPredicate const& p) {
  check_predicate(p);
  auto const it = e.attributes.find(p.attr);
  if (it == end(e.attributes)) {
    return false;
  }
  auto const& v = it->second.value;
  if (v.index() != p.value.index()) {
    return false;
  }
  if (p.op == AttrPredicate::Op::eq) {
    return v == p.value;
  }
  auto const cmp = [&](auto const& lhs, auto const& rhs) { return p.op == AttrPredicate::Op::lt ? lhs < rhs : lhs > rhs; };
  if (auto const* d = std::get_if<double>(&v)) {
    return cmp(*d, std::get<double>(p.value));
  }
  return cmp(std::get<std::string>(v), std::get<std::string>(p.value));
}

Broker::Broker(BrokerOptions opts) : opts_{std::move(opts)} {
  if (!opts_.clock) {
    opts_.clock = system_now;
  }
  if (!opts_.poster) {
    opts_.poster = [](std::string const& url, std::string const& body) {
      try {
        auto const res = http::post(url, body, "application/json");
        return res.status >= 200 && res.status < 300;
      } catch (std::exception const&) {
        return false;
      }
    };
  }
  if (opts_.journal) {
    replay_journal();
    journal_.open(*opts_.journal, std::ios::app);
    if (!journal_) {
      throw std::runtime_error{"cannot open journal " + opts_.journal->string()};
    }
  }
  dispatcher_ = std::thread{[this] { dispatch_loop(); }};
}

Broker::~Broker() {
  {
    std::lock_guard lock{queue_mutex_};
    stopping_ = true;
  }
  queue_cv_.notify_all();
  dispatcher_.join();
}

UpsertResult Broker::upsert(ContextEntity const& e) { return apply(e, opts_.clock(), false); }

void Broker::patch_attributes(std::string const& id, std::map<std::string, Attribute> const& attrs) {
  auto const existing = get(id);
  if (!existing) {
    throw BrokerError{Errc::unknown_entity, "unknown entity " + id};
  }
  apply(ContextEntity{id, existing->type, attrs}, opts_.clock(), false);
}

UpsertResult Broker::apply(ContextEntity const& e, epoch_t received_at, bool replaying) {
  if (auto const problem = check_entity(e); !problem.empty()) {
    throw BrokerError{Errc::malformed_entity, problem};
  }

  std::unique_lock lock{mutex_};
  auto it = entities_.find(e.id);
  auto const created = it == end(entities_);
  if (!created && it->second.type != e.type) {
    throw BrokerError{Errc::id_type_conflict,
                      "entity " + e.id + " exists with type " + it->second.type + ", not " + e.type};
  }
  if (created) {
    it = entities_.emplace(e.id, ContextEntity{e.id, e.type, {}}).first;
  }
  auto& stored = it->second;

  std::set<std::string> changed;
  for (auto const& [name, attr] : e.attributes) {
    auto const prev = stored.attributes.find(name);
    if (prev == end(stored.attributes) || !(prev->second == attr)) {
      changed.insert(name);
      auto& records = history_[{e.id, name}];
      auto const observed = attr.observed_at.value_or(received_at);
      auto const pos = std::upper_bound(begin(records), end(records), observed,
                                        [](epoch_t t, HistoricalRecord const& r) { return t < r.observed_at; });
      records.insert(pos, HistoricalRecord{e.id, name, attr.value, observed});
    }
    stored.attributes[name] = attr;
  }
  ++upserts_;

  if (!replaying && journal_.is_open()) {
    journal_append(e, received_at);
  }

  std::vector<Delivery> out;
  for (auto const& [id, sub] : subscriptions_) {
    if (!matches_scope(stored, sub.entity_type, sub.id_pattern, sub.geo)) {
      continue;
    }
    auto const watched =
        sub.watched_attributes.empty() ||
        std::any_of(begin(sub.watched_attributes), end(sub.watched_attributes),
                    [&](auto const& a) { return changed.contains(a); });
    if (watched) {
      out.push_back(Delivery{sub, Notification{id, opts_.clock(), {stored}}});
    }
  }
  if (!out.empty()) {
    {
      std::lock_guard qlock{queue_mutex_};
      for (auto& d : out) {
        queue_.push_back(std::move(d));
      }
    }
    queue_cv_.notify_one();
  }
  return created ? UpsertResult::created : UpsertResult::updated;
}

std::optional<ContextEntity> Broker::get(std::string const& id) const {
  std::shared_lock lock{mutex_};
  if (auto const it = entities_.find(id); it != end(entities_)) {
    return it->second;
  }
  return std::nullopt;
}

std::vector<ContextEntity> Broker::query(EntityQuery const& q) const {
  if (q.empty()) {
    throw BrokerError{Errc::bad_query, "query needs at least one filter"};
  }
  if (q.geo && !(q.geo->max_distance_meters > 0.0)) {
    throw BrokerError{Errc::bad_query, "maxDistance must be positive"};
  }
  for (auto const& p : q.predicates) {
    check_predicate(p);
  }

  std::vector<ContextEntity> out;
  std::shared_lock lock{mutex_};
  for (auto const& [id, e] : entities_) {
    if (!matches_scope(e, q.type.value_or(""), q.id_pattern.value_or(""), q.geo)) {
      continue;
    }
    if (std::all_of(begin(q.predicates), end(q.predicates),
                    [&](AttrPredicate const& p) { return matches_predicate(e, p); })) {
      out.push_back(e);
    }
  }
  return out;
}

std::string Broker::subscribe(Subscription s) {
  auto const has_url = !s.target.url.empty();
  auto const has_sink = static_cast<bool>(s.target.sink);
  if (has_url == has_sink) {
    throw BrokerError{Errc::bad_target, "subscription needs exactly one of a callback URL or an in-process sink"};
  }
  if (has_url) {
    try {
      http::Url::parse(s.target.url);
    } catch (std::invalid_argument const& e) {
      throw BrokerError{Errc::bad_target, e.what()};
    }
  }
  if (s.geo && !(s.geo->max_distance_meters > 0.0 && s.geo->center.valid())) {
    throw BrokerError{Errc::bad_target, "geo filter needs a valid center and maxDistance > 0"};
  }

  std::unique_lock lock{mutex_};
  if (s.id.empty() || subscriptions_.contains(s.id)) {
    do {
      s.id = "sub-" + std::to_string(next_subscription_++);
    } while (subscriptions_.contains(s.id));
  }
  auto const id = s.id;
  subscriptions_.emplace(id, std::move(s));
  return id;
}

void Broker::unsubscribe(std::string const& id) {
  {
    std::unique_lock lock{mutex_};
    if (subscriptions_.erase(id) == 0) {
      throw BrokerError{Errc::unknown_subscription, "unknown subscription " + id};
    }
  }
  // Drop pending work and wait out an in-flight delivery so the sink is not
  // called after we return.
  std::unique_lock qlock{queue_mutex_};
  std::erase_if(queue_, [&](Delivery const& d) { return d.sub.id == id; });
  if (std::this_thread::get_id() != dispatcher_.get_id()) {
    idle_cv_.wait(qlock, [&] { return !in_flight_; });
  }
}

std::vector<Subscription> Broker::subscriptions() const {
  std::shared_lock lock{mutex_};
  std::vector<Subscription> out;
  for (auto const& [id, s] : subscriptions_) {
    out.push_back(s);
  }
  return out;
}

std::vector<HistoricalRecord> Broker::query_history(std::string const& entity_id, std::string const& attr,
                                                    epoch_t from, epoch_t to) const {
  if (from > to) {
    throw BrokerError{Errc::bad_query, "history window must satisfy from <= to"};
  }
  std::shared_lock lock{mutex_};
  if (!entities_.contains(entity_id)) {
    throw BrokerError{Errc::unknown_entity, "unknown entity " + entity_id};
  }
  auto const it = history_.find({entity_id, attr});
  if (it == end(history_)) {
    return {};
  }
  auto const& records = it->second;
  auto const lo = std::lower_bound(begin(records), end(records), from,
                                   [](HistoricalRecord const& r, epoch_t t) { return r.observed_at < t; });
  auto const hi = std::upper_bound(lo, end(records), to,
                                   [](epoch_t t, HistoricalRecord const& r) { return t < r.observed_at; });
  return {lo, hi};
}

void Broker::flush() {
  std::unique_lock lock{queue_mutex_};
  idle_cv_.wait(lock, [&] { return queue_.empty() && !in_flight_; });
}

BrokerStats Broker::stats() const {
  BrokerStats s;
  {
    std::shared_lock lock{mutex_};
    s.entities = entities_.size();
    s.subscriptions = subscriptions_.size();
    s.upserts = upserts_;
  }
  std::lock_guard lock{queue_mutex_};
  s.notifications_delivered = delivered_;
  s.delivery_failures = failures_;
  return s;
}

void Broker::dispatch_loop() {
  std::unique_lock lock{queue_mutex_};
  while (true) {
    queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) {
      break;  // stopping with nothing left
    }
    auto d = std::move(queue_.front());
    queue_.pop_front();
    in_flight_ = true;
    lock.unlock();
    deliver(d);
    lock.lock();
    in_flight_ = false;
    idle_cv_.notify_all();
  }
}

void Broker::deliver(Delivery const& d) {
  auto ok = false;
  if (d.sub.target.sink) {
    try {
      d.sub.target.sink(d.notification);
      ok = true;
    } catch (std::exception const&) {
      ok = false;
    }
  } else {
    ok = opts_.poster(d.sub.target.url, to_json(d.notification).dump());
  }
  std::lock_guard lock{queue_mutex_};
  ++(ok ? delivered_ : failures_);
}

void Broker::journal_append(ContextEntity const& e, epoch_t received_at) {
  journal_ << nlohmann::json{{"receivedAt", received_at}, {"entity", to_json(e)}}.dump() << '\n';
  journal_.flush();
}

void Broker::replay_journal() {
  std::ifstream in{*opts_.journal};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    auto const j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("entity")) {
      continue;  // torn final write
    }
    apply(entity_from_json(j.at("entity")), j.value("receivedAt", epoch_t{0}), true);
  }
}

}  // namespace atomic::ngsi
