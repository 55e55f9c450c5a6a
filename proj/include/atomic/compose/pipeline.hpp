#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "atomic/compose/config.hpp"
#include "atomic/ngsi/client.hpp"

namespace atomic::compose {

/// Startup aborted at `stage`; everything started before it was torn down.
class StageFailure : public std::runtime_error {
public:
  StageFailure(std::string stage, std::string const& why)
      : std::runtime_error{"stage " + stage + " failed: " + why}, stage_{std::move(stage)} {}
  std::string const& stage() const { return stage_; }

private:
  std::string stage_;
};

enum class Health { up, degraded, down };
std::string_view to_string(Health h);

struct StageStatus {
  std::string stage;
  Health health{Health::down};
  nlohmann::json counters = nlohmann::json::object();
  std::string detail;
};

/// "router    up        feedsLoaded=1 realtimeUpdates=4"
std::string format_status_line(StageStatus const& s);

/// A running routing city service. Stages, in start order: broker, fixture,
/// ngsi2gtfs, pointer, fetcher (with the router as its plugin), bridge,
/// estimator:<i>. The long-running ones report status; teardown runs in
/// reverse.
///
/// A stage is down when it no longer runs, degraded when it runs but
/// reports a problem or depends on a stage that is not up, and up otherwise.
class Pipeline {
public:
  virtual ~Pipeline() = default;

  virtual Mode mode() const = 0;
  virtual ServiceDate date() const = 0;
  /// A client to the pipeline's broker.
  virtual ngsi::BrokerClient& broker() = 0;
  /// The fixture loaded at startup, if the config asked for one.
  virtual std::optional<Fixture> const& fixture() const = 0;
  /// Base URLs of stages that listen, by stage name.
  virtual std::map<std::string, std::string> endpoints() const = 0;

  /// Body of the router's GET /route. Throws std::runtime_error when the
  /// router cannot answer.
  virtual nlohmann::json route(std::string const& from, std::string const& to, epoch_t depart_after) = 0;

  /// Waits until the bridge has applied at least `notifications` and the
  /// router has since pulled its feed. False on timeout.
  virtual bool wait_realtime(std::uint64_t notifications, std::chrono::milliseconds timeout) = 0;

  /// One line per long-running stage, in start order.
  virtual std::vector<StageStatus> status() = 0;

  /// Failure injection: stops `stage` abruptly without telling the others.
  virtual void kill_stage(std::string const& stage) = 0;

  /// Reverse-order teardown. Idempotent.
  virtual void stop() = 0;
};

/// Throws ConfigError and StageFailure.
std::unique_ptr<Pipeline> start_pipeline(PipelineConfig const& config, Mode mode);

}  // namespace atomic::compose
