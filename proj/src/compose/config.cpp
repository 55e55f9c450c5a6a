#include "atomic/compose/config.hpp"

#include <limits>
#include <set>

#include "atomic/common/io.hpp"

namespace atomic::compose {

namespace {

using nlohmann::json;

void only_keys(json const& j, std::string const& where, std::set<std::string> const& allowed) {
  if (!j.is_object()) {
    throw ConfigError{where + " must be an object"};
  }
  for (auto const& [k, v] : j.items()) {
    if (!allowed.contains(k)) {
      throw ConfigError{"unknown key '" + k + "' in " + where};
    }
  }
}

template <typename T>
std::optional<T> field(json const& j, char const* key, std::string const& where) {
  auto const it = j.find(key);
  if (it == j.end()) {
    return std::nullopt;
  }
  try {
    return it->get<T>();
  } catch (json::exception const&) {
    throw ConfigError{std::string{where} + "." + key + " has the wrong type"};
  }
}

std::optional<http::ListenAddress> listen_field(json const& j, std::string const& where) {
  auto const text = field<std::string>(j, "listen", where);
  if (!text) {
    return std::nullopt;
  }
  try {
    return http::ListenAddress::parse(*text);
  } catch (std::exception const& e) {
    throw ConfigError{where + ".listen: " + e.what()};
  }
}

std::chrono::milliseconds positive_ms(json const& j, char const* key, std::string const& where,
                                      std::chrono::milliseconds fallback) {
  auto const v = field<std::int64_t>(j, key, where);
  if (!v) {
    return fallback;
  }
  if (*v <= 0) {
    throw ConfigError{where + "." + key + " must be positive"};
  }
  return std::chrono::milliseconds{*v};
}

epoch_t positive_seconds(json const& j, char const* key, std::string const& where, epoch_t fallback) {
  auto const v = field<std::int64_t>(j, key, where);
  if (!v) {
    return fallback;
  }
  if (*v <= 0) {
    throw ConfigError{where + "." + key + " must be positive"};
  }
  return *v;
}

}  // namespace

Mode parse_mode(std::string_view s) {
  if (s == "inproc") {
    return Mode::inproc;
  }
  if (s == "multiproc") {
    return Mode::multiproc;
  }
  throw ConfigError{"mode must be inproc or multiproc, got '" + std::string{s} + "'"};
}

std::string_view to_string(Mode m) { return m == Mode::inproc ? "inproc" : "multiproc"; }

PipelineConfig PipelineConfig::from_json(json const& j) {
  only_keys(j, "config",
            {"workdir", "feedId", "today", "fixture", "broker", "fetcher", "bridge", "router", "estimators", "binary",
             "startupTimeoutMs"});
  PipelineConfig c;

  auto const workdir = field<std::string>(j, "workdir", "config");
  if (!workdir || workdir->empty()) {
    throw ConfigError{"config.workdir is required"};
  }
  c.workdir = *workdir;
  c.feed_id = field<std::string>(j, "feedId", "config").value_or(c.feed_id);
  if (c.feed_id.empty()) {
    throw ConfigError{"config.feedId must not be empty"};
  }
  if (auto const today = field<std::string>(j, "today", "config")) {
    try {
      c.today = ServiceDate::parse(*today);
    } catch (std::exception const& e) {
      throw ConfigError{std::string{"config.today: "} + e.what()};
    }
  }

  if (j.contains("fixture")) {
    auto const& f = j["fixture"];
    only_keys(f, "fixture", {"seed", "size"});
    FixtureConfig fc;
    if (auto const seed = field<std::int64_t>(f, "seed", "fixture")) {
      if (*seed < 0 || *seed > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError{"fixture.seed out of range"};
      }
      fc.seed = static_cast<std::uint32_t>(*seed);
    }
    if (auto const size = field<std::string>(f, "size", "fixture")) {
      try {
        fc.size = parse_fixture_size(*size);
      } catch (std::invalid_argument const& e) {
        throw ConfigError{std::string{"fixture.size: "} + e.what()};
      }
    }
    c.fixture = fc;
  }

  if (!j.contains("broker")) {
    throw ConfigError{"config.broker is required"};
  }
  only_keys(j["broker"], "broker", {"listen"});
  c.broker_listen = listen_field(j["broker"], "broker");

  if (j.contains("fetcher")) {
    only_keys(j["fetcher"], "fetcher", {"pollIntervalMs"});
    c.fetcher_poll = positive_ms(j["fetcher"], "pollIntervalMs", "fetcher", c.fetcher_poll);
  }

  if (j.contains("bridge")) {
    auto const& b = j["bridge"];
    only_keys(b, "bridge", {"enabled", "listen", "horizonSeconds"});
    c.bridge = field<bool>(b, "enabled", "bridge").value_or(true);
    c.bridge_listen = listen_field(b, "bridge");
    c.bridge_horizon_seconds = positive_seconds(b, "horizonSeconds", "bridge", c.bridge_horizon_seconds);
  }

  if (!j.contains("router")) {
    throw ConfigError{"config.router is required"};
  }
  only_keys(j["router"], "router", {"listen", "realtimePollMs"});
  c.router_listen = listen_field(j["router"], "router");
  c.realtime_poll = positive_ms(j["router"], "realtimePollMs", "router", c.realtime_poll);

  if (j.contains("estimators")) {
    if (!j["estimators"].is_array()) {
      throw ConfigError{"config.estimators must be an array"};
    }
    for (auto const& e : j["estimators"]) {
      auto const where = "estimators[" + std::to_string(c.estimators.size()) + "]";
      only_keys(e, where, {"target", "stepSeconds", "horizonSeconds", "cycleMs", "listen"});
      EstimatorStageConfig ec;
      auto const target = field<std::string>(e, "target", where);
      if (!target) {
        throw ConfigError{where + ".target is required"};
      }
      try {
        ec.target = estimator::Target::parse(*target);
      } catch (std::invalid_argument const& ex) {
        throw ConfigError{where + ".target: " + ex.what()};
      }
      ec.step_seconds = positive_seconds(e, "stepSeconds", where, ec.step_seconds);
      ec.horizon_seconds = positive_seconds(e, "horizonSeconds", where, ec.horizon_seconds);
      if (ec.horizon_seconds % ec.step_seconds != 0) {
        throw ConfigError{where + ".horizonSeconds must be a multiple of stepSeconds"};
      }
      ec.cycle_interval = positive_ms(e, "cycleMs", where, ec.cycle_interval);
      ec.listen = listen_field(e, where);
      c.estimators.push_back(std::move(ec));
    }
  }

  if (auto const binary = field<std::string>(j, "binary", "config")) {
    c.binary = *binary;
  }
  c.startup_timeout = positive_ms(j, "startupTimeoutMs", "config", c.startup_timeout);
  return c;
}

PipelineConfig PipelineConfig::load(std::filesystem::path const& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (std::exception const& e) {
    throw ConfigError{"cannot read " + path.string() + ": " + e.what()};
  }
  json j;
  try {
    j = json::parse(text);
  } catch (json::parse_error const& e) {
    throw ConfigError{path.string() + ": " + e.what()};
  }
  return from_json(j);
}

json PipelineConfig::to_json() const {
  json j{{"workdir", workdir.string()},
         {"feedId", feed_id},
         {"broker", json::object()},
         {"fetcher", {{"pollIntervalMs", fetcher_poll.count()}}},
         {"bridge", {{"enabled", bridge}, {"horizonSeconds", bridge_horizon_seconds}}},
         {"router", {{"realtimePollMs", realtime_poll.count()}}},
         {"startupTimeoutMs", startup_timeout.count()}};
  if (today) {
    j["today"] = today->str();
  }
  if (fixture) {
    j["fixture"] = {{"seed", fixture->seed}, {"size", std::string{compose::to_string(fixture->size)}}};
  }
  if (broker_listen) {
    j["broker"]["listen"] = broker_listen->str();
  }
  if (bridge_listen) {
    j["bridge"]["listen"] = bridge_listen->str();
  }
  if (router_listen) {
    j["router"]["listen"] = router_listen->str();
  }
  if (!estimators.empty()) {
    j["estimators"] = json::array();
    for (auto const& e : estimators) {
      json ej{{"target", e.target.entity_id + ":" + e.target.attr + ":" + std::string{estimator::to_string(e.target.kind)}},
              {"stepSeconds", e.step_seconds},
              {"horizonSeconds", e.horizon_seconds},
              {"cycleMs", e.cycle_interval.count()}};
      if (e.listen) {
        ej["listen"] = e.listen->str();
      }
      j["estimators"].push_back(ej);
    }
  }
  if (binary) {
    j["binary"] = binary->string();
  }
  return j;
}

}  // namespace atomic::compose
