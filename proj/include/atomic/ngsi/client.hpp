#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atomic/ngsi/types.hpp"

namespace atomic::ngsi {

class Broker;

/// What every atomic service sees of the context broker. Transport failures
/// surface as BrokerError(Errc::unavailable).
class BrokerClient {
public:
  virtual ~BrokerClient() = default;

  virtual UpsertResult upsert(ContextEntity const& e) = 0;
  virtual std::optional<ContextEntity> get(std::string const& id) = 0;
  virtual std::vector<ContextEntity> query(EntityQuery const& q) = 0;
  virtual std::string subscribe(Subscription const& s) = 0;
  virtual void unsubscribe(std::string const& id) = 0;
  virtual std::vector<Subscription> subscriptions() = 0;
  virtual std::vector<HistoricalRecord> history(std::string const& entity_id, std::string const& attr, epoch_t from,
                                                epoch_t to) = 0;
  virtual bool ping() = 0;
};

/// Direct calls into an in-process broker. `set_available(false)` makes every
/// call fail as if the broker were down, for fault injection.
class LocalBrokerClient final : public BrokerClient {
public:
  explicit LocalBrokerClient(std::shared_ptr<Broker> broker) : broker_{std::move(broker)} {}

  UpsertResult upsert(ContextEntity const& e) override;
  std::optional<ContextEntity> get(std::string const& id) override;
  std::vector<ContextEntity> query(EntityQuery const& q) override;
  std::string subscribe(Subscription const& s) override;
  void unsubscribe(std::string const& id) override;
  std::vector<Subscription> subscriptions() override;
  std::vector<HistoricalRecord> history(std::string const& entity_id, std::string const& attr, epoch_t from,
                                        epoch_t to) override;
  bool ping() override { return available_; }

  void set_available(bool up) { available_ = up; }
  Broker& broker() { return *broker_; }

private:
  void check() const;

  std::shared_ptr<Broker> broker_;
  std::atomic_bool available_{true};
};

/// Talks to a broker's HTTP JSON API. Subscriptions must carry a URL target.
class HttpBrokerClient final : public BrokerClient {
public:
  explicit HttpBrokerClient(std::string base_url, int timeout_ms = 5000);

  UpsertResult upsert(ContextEntity const& e) override;
  std::optional<ContextEntity> get(std::string const& id) override;
  std::vector<ContextEntity> query(EntityQuery const& q) override;
  std::string subscribe(Subscription const& s) override;
  void unsubscribe(std::string const& id) override;
  std::vector<Subscription> subscriptions() override;
  std::vector<HistoricalRecord> history(std::string const& entity_id, std::string const& attr, epoch_t from,
                                        epoch_t to) override;
  bool ping() override;

  std::string const& base_url() const { return base_url_; }

private:
  std::string base_url_;
  int timeout_ms_;
};

/// "http://..." builds an HTTP client; anything else is rejected.
std::unique_ptr<BrokerClient> connect(std::string const& url);

}  // namespace atomic::ngsi
