#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <optional>
#include <thread>

#include "atomic/estimator/event_log.hpp"
#include "atomic/estimator/model.hpp"

namespace atomic::estimator {

struct Target {
  std::string entity_id;
  std::string attr;
  TargetKind kind{TargetKind::traffic};

  /// "entityId:attr:parking|traffic"; the entity id may itself contain ':'.
  static Target parse(std::string_view text);
  friend bool operator==(Target const&, Target const&) = default;
};

/// "urn:ngsi:Prediction:{entityId}:{attr}"
std::string prediction_entity_id(std::string const& entity_id, std::string const& attr);

ngsi::ContextEntity to_context(Prediction const& p);
Prediction prediction_from_context(ngsi::ContextEntity const& e);

struct EstimatorOptions {
  epoch_t step_seconds{3600};
  epoch_t horizon_seconds{3600};
  epoch_t window_seconds{14 * 86400};
  epoch_t season_seconds{86400};
  int max_fill_steps{3};
  /// Pause between estimation cycles of the background loop.
  std::chrono::milliseconds cycle_interval{std::chrono::seconds{3600}};
  Clock clock = system_now;
  std::optional<std::filesystem::path> log_path;
};

struct Served {
  Prediction prediction;
  bool recomputed{false};
};

struct UnknownTarget : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Nothing to serve: the cache entity is unreachable and no value can be
/// computed.
struct Unavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Harvests history from the broker, predicts, and persists Prediction
/// entities back to it; the broker entity is the cache the API serves from.
///
/// Parking targets predict availability = availableSpots / totalSpots when
/// the harvested attribute is availableSpots.
class EstimatorService {
public:
  EstimatorService(ngsi::BrokerClient& broker, std::vector<Target> targets, EstimatorOptions opts = {},
                   std::shared_ptr<PredictionModel const> model = nullptr);
  ~EstimatorService();

  EstimatorService(EstimatorService const&) = delete;
  EstimatorService& operator=(EstimatorService const&) = delete;

  /// harvest + fit + predict, one event each. Throws EstimatorError and BrokerError.
  Prediction estimate(Target const& t);
  /// Upserts the cache entity and logs persist. Throws BrokerError.
  std::string persist(Prediction const& p);
  /// estimate + persist for every target; failures are logged, not thrown.
  /// Returns how many predictions were persisted.
  std::size_t run_cycle();

  /// The cached prediction when it is at most one step old, else a fresh
  /// estimate (persisted when the broker takes it). Throws UnknownTarget and
  /// Unavailable.
  Served serve(std::string const& entity_id, std::string const& attr);
  /// Past predictedValue records of every target on `entity_id`.
  nlohmann::json history(std::string const& entity_id);

  void start();
  void stop();

  std::vector<Target> const& targets() const { return targets_; }
  EventLog& log() { return log_; }
  std::uint64_t persisted() const;
  nlohmann::json status_json() const;

private:
  Target const* find(std::string const& entity_id, std::string const& attr) const;
  Harvest harvest_for(Target const& t, epoch_t now);

  ngsi::BrokerClient& broker_;
  std::vector<Target> targets_;
  EstimatorOptions opts_;
  std::shared_ptr<PredictionModel const> model_;
  EventLog log_;

  mutable std::mutex mutex_;
  std::map<std::string, Prediction> last_persisted_;  // by cache entity id
  std::uint64_t persisted_{0};
  std::uint64_t failures_{0};

  std::condition_variable wake_;
  bool stopping_{false};
  std::thread thread_;
};

}  // namespace atomic::estimator
