#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "atomic/common/http_client.hpp"
#include "atomic/compose/fixture.hpp"
#include "atomic/estimator/service.hpp"

namespace atomic::compose {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { inproc, multiproc };

Mode parse_mode(std::string_view s);  // throws ConfigError
std::string_view to_string(Mode m);

struct FixtureConfig {
  std::uint32_t seed{1};
  FixtureSize size{FixtureSize::tiny};
};

struct EstimatorStageConfig {
  estimator::Target target;
  epoch_t step_seconds{3600};
  epoch_t horizon_seconds{3600};
  std::chrono::milliseconds cycle_interval{60000};
  std::optional<http::ListenAddress> listen;
};

/// A pipeline description. JSON form:
///
///   {
///     "workdir": "/tmp/city",
///     "feedId": "city",
///     "today": "20240603",
///     "fixture": {"seed": 1, "size": "tiny"},
///     "broker": {"listen": "127.0.0.1:0"},
///     "fetcher": {"pollIntervalMs": 1000},
///     "bridge": {"enabled": true, "listen": "127.0.0.1:0", "horizonSeconds": 7200},
///     "router": {"listen": "127.0.0.1:0", "realtimePollMs": 500},
///     "estimators": [{"target": "id:attr:parking", "stepSeconds": 3600,
///                     "horizonSeconds": 3600, "cycleMs": 60000, "listen": "127.0.0.1:0"}],
///     "binary": "/usr/local/bin/atomic-transit",
///     "startupTimeoutMs": 15000
///   }
///
/// "workdir", "broker" and "router" are required; unknown keys are errors.
/// In multiproc mode every stage listens, on a free port when none is given.
struct PipelineConfig {
  std::filesystem::path workdir;
  std::string feed_id{"city"};
  std::optional<ServiceDate> today;
  std::optional<FixtureConfig> fixture;
  std::optional<http::ListenAddress> broker_listen;
  std::chrono::milliseconds fetcher_poll{1000};
  bool bridge{true};
  std::optional<http::ListenAddress> bridge_listen;
  epoch_t bridge_horizon_seconds{7200};
  std::optional<http::ListenAddress> router_listen;
  std::chrono::milliseconds realtime_poll{500};
  std::vector<EstimatorStageConfig> estimators;
  std::optional<std::filesystem::path> binary;
  std::chrono::milliseconds startup_timeout{15000};

  static PipelineConfig from_json(nlohmann::json const& j);
  static PipelineConfig load(std::filesystem::path const& path);
  nlohmann::json to_json() const;
};

}  // namespace atomic::compose
