#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <thread>
#include <vector>

#include "atomic/ngsi/types.hpp"

namespace atomic::ngsi {

/// Posts a notification body to a callback URL; returns false on failure.
using HttpPoster = std::function<bool(std::string const& url, std::string const& body)>;

struct BrokerOptions {
  /// Append-only JSON-lines journal; replayed on construction when present.
  std::optional<std::filesystem::path> journal;
  Clock clock = system_now;
  /// Delivery for URL targets. Defaults to an HTTP POST with a JSON body.
  HttpPoster poster;
};

struct BrokerStats {
  std::size_t entities{0};
  std::size_t subscriptions{0};
  std::uint64_t upserts{0};
  std::uint64_t notifications_delivered{0};
  std::uint64_t delivery_failures{0};
};

/// In-memory context broker: entity store, filtered and geographic queries,
/// subscriptions with asynchronous FIFO notification delivery, per-attribute
/// history.
///
/// Writes take an exclusive lock, reads a shared one, so a query never sees a
/// half-applied upsert. Notifications are snapshotted under the write lock and
/// handed to a single dispatcher thread, which preserves upsert order.
class Broker {
public:
  explicit Broker(BrokerOptions opts = {});
  ~Broker();

  Broker(Broker const&) = delete;
  Broker& operator=(Broker const&) = delete;

  UpsertResult upsert(ContextEntity const& e);
  /// Merges attributes into an existing entity; throws unknown_entity.
  void patch_attributes(std::string const& id, std::map<std::string, Attribute> const& attrs);

  std::optional<ContextEntity> get(std::string const& id) const;
  std::vector<ContextEntity> query(EntityQuery const& q) const;

  std::string subscribe(Subscription s);
  void unsubscribe(std::string const& id);
  std::vector<Subscription> subscriptions() const;

  std::vector<HistoricalRecord> query_history(std::string const& entity_id, std::string const& attr, epoch_t from,
                                              epoch_t to) const;

  /// Blocks until every queued notification has been delivered.
  void flush();

  BrokerStats stats() const;

private:
  struct Delivery {
    Subscription sub;
    Notification notification;
  };

  UpsertResult apply(ContextEntity const& e, epoch_t received_at, bool replaying);
  void dispatch_loop();
  void deliver(Delivery const& d);
  void journal_append(ContextEntity const& e, epoch_t received_at);
  void replay_journal();

  BrokerOptions opts_;

  mutable std::shared_mutex mutex_;
  std::map<std::string, ContextEntity> entities_;
  std::map<std::pair<std::string, std::string>, std::vector<HistoricalRecord>> history_;
  std::map<std::string, Subscription> subscriptions_;
  std::uint64_t next_subscription_{1};
  std::uint64_t upserts_{0};
  std::ofstream journal_;

  mutable std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<Delivery> queue_;
  bool in_flight_{false};
  bool stopping_{false};
  std::uint64_t delivered_{0};
  std::uint64_t failures_{0};
  std::thread dispatcher_;
};

}  // namespace atomic::ngsi
