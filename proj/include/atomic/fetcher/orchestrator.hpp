#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>

#include "atomic/fetcher/fetcher.hpp"

namespace atomic::fetcher {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Command-line level configuration of a fetcher process.
struct FetcherConfig {
  std::string broker_endpoint;
  int poll_interval_seconds{60};
  std::optional<ServiceDate> today_override;
  std::string plugin_endpoint;

  /// Throws ConfigError.
  void validate() const;
};

struct OrchestratorOptions {
  std::chrono::milliseconds poll_interval{60000};
  std::optional<ServiceDate> today_override;
  Clock clock = system_now;
};

struct PollReport {
  bool ok{false};
  std::string error;  // set when the broker could not be queried
  std::vector<FeedState> states;
  std::vector<SkippedPointer> skipped;
};

/// Polls the broker for feed pointers and runs fetch_and_load for each one.
class Orchestrator {
public:
  Orchestrator(ngsi::BrokerClient& broker, RoutingEnginePlugin& plugin, OrchestratorOptions opts = {});
  ~Orchestrator();

  Orchestrator(Orchestrator const&) = delete;
  Orchestrator& operator=(Orchestrator const&) = delete;

  /// Runs the first poll on the calling thread, then keeps polling in the
  /// background. Throws BrokerError when that first poll cannot reach the
  /// broker; nothing is left running in that case.
  void start();
  /// Waits for an in-flight poll to finish. No plugin call happens afterwards.
  void stop();
  bool running() const { return thread_.joinable(); }

  /// One synchronous round. A broker failure is reported, and feed states
  /// from earlier rounds are kept.
  PollReport poll_once();

  std::vector<FeedState> states() const { return fetcher_.states(); }
  std::uint64_t polls() const;
  std::uint64_t failed_polls() const;
  ServiceDate today() const;
  nlohmann::json status_json() const;

private:
  PollReport poll_locked();
  void loop();

  ngsi::BrokerClient& broker_;
  OrchestratorOptions opts_;
  FeedFetcher fetcher_;

  std::mutex poll_mutex_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool stopping_{false};
  std::uint64_t polls_{0};
  std::uint64_t failed_polls_{0};
  std::vector<SkippedPointer> last_skipped_;
  std::string last_error_;
  std::thread thread_;
};

}  // namespace atomic::fetcher
