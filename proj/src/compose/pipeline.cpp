#include "atomic/compose/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <deque>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "atomic/common/http_client.hpp"
#include "atomic/common/io.hpp"
#include "atomic/compose/process.hpp"
#include "atomic/estimator/http_api.hpp"
#include "atomic/fetcher/orchestrator.hpp"
#include "atomic/ngsi/broker.hpp"
#include "atomic/ngsi/http_api.hpp"
#include "atomic/ngsi2gtfs/export.hpp"
#include "atomic/router/engine.hpp"
#include "atomic/router/http_api.hpp"
#include "atomic/rt/bridge.hpp"
#include "atomic/rt/http_api.hpp"

namespace atomic::compose {

namespace {

using nlohmann::json;
using namespace std::chrono_literals;

template <typename F>
auto run_stage(std::string const& stage, F&& f) {
  try {
    spdlog::info("compose: starting {}", stage);
    return f();
  } catch (StageFailure const&) {
    throw;
  } catch (std::exception const& e) {
    throw StageFailure{stage, e.what()};
  }
}

std::filesystem::path feed_path(PipelineConfig const& c) { return std::filesystem::absolute(c.workdir / "feed.zip"); }

ServiceDate planning_date(PipelineConfig const& c) {
  return c.today.value_or(ServiceDate::from_epoch(system_now()));
}

/// Upserts a pointer to the exported archive, valid over the feed's service span.
void register_pointer(ngsi::BrokerClient& broker, PipelineConfig const& c, std::string const& version) {
  auto const feed = gtfs::read_feed(read_file(feed_path(c)));
  auto const span = gtfs::feed_date_span(feed);
  if (!span) {
    throw std::runtime_error{"exported feed has no service dates"};
  }
  broker.upsert(mobility::to_context(
      mobility::FeedPointer{c.feed_id, "file://" + feed_path(c).string(), version, span->first, span->second}));
}

void load_fixture(ngsi::BrokerClient& broker, Fixture const& fx) {
  for (auto const& e : fx.entities) {
    broker.upsert(mobility::to_context(e));
  }
}

json broker_counters(json const& s) {
  return {{"entities", s.value("entities", 0)},
          {"subscriptions", s.value("subscriptions", 0)},
          {"notificationsDelivered", s.value("notificationsDelivered", 0)}};
}

json fetcher_counters(json const& s) {
  std::size_t loaded = 0;
  for (auto const& f : s.value("feeds", json::array())) {
    if (f.contains("lastVersion")) {
      ++loaded;
    }
  }
  return {{"polls", s.value("polls", 0)}, {"failedPolls", s.value("failedPolls", 0)}, {"feedsLoaded", loaded}};
}

StageStatus fetcher_status(json const& s) {
  StageStatus st{"fetcher", Health::up, fetcher_counters(s), ""};
  if (s.contains("lastError")) {
    st.health = Health::degraded;
    st.detail = s["lastError"].get<std::string>();
  }
  return st;
}

StageStatus router_status(json const& s) {
  StageStatus st{"router", Health::up,
                 {{"feedsLoaded", s.value("feedsLoaded", 0)}, {"realtimeUpdates", s.value("realtimeUpdates", 0)}}, ""};
  if (st.counters["feedsLoaded"] == 0) {
    st.health = Health::degraded;
    st.detail = "no feed loaded";
  }
  return st;
}

StageStatus bridge_status(json const& m) {
  return {"bridge", Health::up,
          {{"notificationsApplied", m.value("notificationsApplied", 0)},
           {"skipped", m.value("skipped", 0)},
           {"malformed", m.value("malformed", 0)}},
          ""};
}

StageStatus estimator_status(std::string name, json const& s) {
  StageStatus st{std::move(name), Health::up,
                 {{"predictionsPersisted", s.value("predictionsPersisted", 0)},
                  {"cycleFailures", s.value("cycleFailures", 0)}},
                 ""};
  if (st.counters["predictionsPersisted"] == 0 && st.counters["cycleFailures"] != 0) {
    st.health = Health::degraded;
    st.detail = "no prediction persisted yet";
  }
  return st;
}

/// Demotes an up stage to degraded while any stage it depends on is not up.
/// Stages come in pipeline order, so a demotion reaches everything downstream.
void apply_dependencies(std::vector<StageStatus>& stages, bool bridge_enabled) {
  std::map<std::string, Health> health;
  for (auto& s : stages) {
    std::vector<std::string> deps;
    if (s.stage == "router") {
      deps = {"fetcher"};
      if (bridge_enabled) {
        deps.push_back("bridge");
      }
    } else if (s.stage != "broker") {
      deps = {"broker"};
    }
    for (auto const& d : deps) {
      auto const it = health.find(d);
      if (s.health == Health::up && it != end(health) && it->second != Health::up) {
        s.health = Health::degraded;
        s.detail = d + " is " + std::string{to_string(it->second)};
      }
    }
    health[s.stage] = s.health;
  }
}

json journey_body(std::string const& from, std::string const& to, epoch_t depart_after,
                  std::optional<router::Journey> const& j) {
  json body{{"from", from}, {"to", to}, {"departAfter", to_iso8601(depart_after)}, {"found", j.has_value()}};
  if (j) {
    body.update(router::to_json(*j));
  }
  return body;
}

class InprocPipeline final : public Pipeline {
public:
  explicit InprocPipeline(PipelineConfig cfg) : cfg_{std::move(cfg)}, date_{planning_date(cfg_)} {}
  ~InprocPipeline() override { stop(); }

  void start() {
    run_stage("broker", [&] {
      broker_ = std::make_shared<ngsi::Broker>();
      client_ = std::make_unique<ngsi::LocalBrokerClient>(broker_);
      if (cfg_.broker_listen) {
        broker_api_ = std::make_unique<ngsi::BrokerHttpApi>(broker_);
        broker_api_->start(cfg_.broker_listen->host, cfg_.broker_listen->port);
      }
    });
    if (cfg_.fixture) {
      run_stage("fixture", [&] {
        fixture_ = gen_fixture(cfg_.fixture->seed, cfg_.fixture->size);
        load_fixture(*client_, *fixture_);
      });
    }
    auto const summary = run_stage("ngsi2gtfs", [&] {
      std::filesystem::create_directories(cfg_.workdir);
      return ngsi2gtfs::run_export(*client_, {feed_path(cfg_), std::nullopt, std::nullopt});
    });
    run_stage("pointer", [&] { register_pointer(*client_, cfg_, summary.feed_version); });
    run_stage("fetcher", [&] {
      engine_ = std::make_shared<router::RouterEngine>(router::RouterOptions{date_, system_now});
      orchestrator_ = std::make_unique<fetcher::Orchestrator>(
          *client_, *engine_, fetcher::OrchestratorOptions{cfg_.fetcher_poll, date_, system_now});
      orchestrator_->start();
      if (engine_->status_json()["feedsLoaded"] == 0) {
        throw std::runtime_error{"router did not receive the feed: " + orchestrator_->status_json().dump()};
      }
      if (cfg_.router_listen) {
        router_api_ = std::make_unique<router::RouterHttpApi>(engine_);
        router_api_->start(cfg_.router_listen->host, cfg_.router_listen->port);
      }
    });
    if (cfg_.bridge) {
      run_stage("bridge", [&] {
        auto const feed = gtfs::read_feed(read_file(feed_path(cfg_)));
        bridge_ = std::make_shared<rt::Bridge>(rt::ScheduleIndex::build(feed, date_),
                                               rt::BridgeOptions{cfg_.bridge_horizon_seconds, system_now, {}});
        bridge_->start(*client_);
        if (cfg_.bridge_listen) {
          bridge_api_ = std::make_unique<rt::BridgeHttpApi>(bridge_);
          bridge_api_->start(cfg_.bridge_listen->host, cfg_.bridge_listen->port);
        }
        rt::decode(bridge_->snapshot()->trip_updates);
        poller_ = std::make_unique<router::RealtimePoller>(
            *engine_,
            [this] {
              if (!bridge_alive_) {
                throw std::runtime_error{"bridge is gone"};
              }
              return bridge_->snapshot()->trip_updates;
            },
            cfg_.realtime_poll);
        poller_->start();
      });
    }
    for (std::size_t i = 0; i < cfg_.estimators.size(); ++i) {
      auto const name = "estimator:" + std::to_string(i);
      run_stage(name, [&] {
        auto const& ec = cfg_.estimators[i];
        estimator::EstimatorOptions eo;
        eo.step_seconds = ec.step_seconds;
        eo.horizon_seconds = ec.horizon_seconds;
        eo.cycle_interval = ec.cycle_interval;
        eo.log_path = cfg_.workdir / ("estimator-" + std::to_string(i) + ".jsonl");
        Estimator e;
        e.service = std::make_shared<estimator::EstimatorService>(*client_, std::vector{ec.target}, eo);
        e.service->start();
        if (ec.listen) {
          e.api = std::make_unique<estimator::EstimatorHttpApi>(e.service);
          e.api->start(ec.listen->host, ec.listen->port);
        }
        estimators_.push_back(std::move(e));
      });
    }
  }

  Mode mode() const override { return Mode::inproc; }
  ServiceDate date() const override { return date_; }
  ngsi::BrokerClient& broker() override { return *client_; }
  std::optional<Fixture> const& fixture() const override { return fixture_; }

  std::map<std::string, std::string> endpoints() const override {
    std::map<std::string, std::string> out;
    if (broker_api_) {
      out["broker"] = broker_api_->base_url();
    }
    if (router_api_) {
      out["router"] = router_api_->base_url();
    }
    if (bridge_api_) {
      out["bridge"] = bridge_api_->base_url();
    }
    for (std::size_t i = 0; i < estimators_.size(); ++i) {
      if (estimators_[i].api) {
        out["estimator:" + std::to_string(i)] = estimators_[i].api->base_url();
      }
    }
    return out;
  }

  json route(std::string const& from, std::string const& to, epoch_t depart_after) override {
    if (killed_.contains("router")) {
      throw std::runtime_error{"router is down"};
    }
    return journey_body(from, to, depart_after, engine_->route(from, to, depart_after));
  }

  bool wait_realtime(std::uint64_t notifications, std::chrono::milliseconds timeout) override {
    if (!bridge_ || !bridge_alive_ || killed_.contains("router")) {
      return false;
    }
    auto const deadline = std::chrono::steady_clock::now() + timeout;
    while (bridge_->snapshot()->metrics.notifications_applied < notifications) {
      if (std::chrono::steady_clock::now() >= deadline) {
        return false;
      }
      std::this_thread::sleep_for(5ms);
    }
    return poller_->poll_once();
  }

  std::vector<StageStatus> status() override {
    std::vector<StageStatus> out;
    auto const stats = broker_->stats();
    out.push_back({"broker", killed_.contains("broker") ? Health::down : Health::up,
                   broker_counters({{"entities", stats.entities},
                                    {"subscriptions", stats.subscriptions},
                                    {"notificationsDelivered", stats.notifications_delivered}}),
                   ""});
    out.push_back(killed_.contains("fetcher") ? StageStatus{"fetcher", Health::down, {}, "stopped"}
                                              : fetcher_status(orchestrator_->status_json()));
    if (bridge_) {
      out.push_back(bridge_alive_ ? bridge_status(bridge_->metrics_json())
                                  : StageStatus{"bridge", Health::down, {}, "stopped"});
    }
    out.push_back(killed_.contains("router") ? StageStatus{"router", Health::down, {}, "stopped"}
                                             : router_status(engine_->status_json()));
    for (std::size_t i = 0; i < estimators_.size(); ++i) {
      auto name = "estimator:" + std::to_string(i);
      out.push_back(killed_.contains(name) ? StageStatus{name, Health::down, {}, "stopped"}
                                           : estimator_status(name, estimators_[i].service->status_json()));
    }
    apply_dependencies(out, cfg_.bridge);
    return out;
  }

  void kill_stage(std::string const& stage) override {
    if (stage == "broker") {
      client_->set_available(false);
      if (broker_api_) {
        broker_api_->stop();
      }
    } else if (stage == "fetcher") {
      orchestrator_->stop();
    } else if (stage == "bridge" && bridge_) {
      bridge_alive_ = false;
      if (bridge_api_) {
        bridge_api_->stop();
      }
      bridge_->stop();
    } else if (stage == "router") {
      if (poller_) {
        poller_->stop();
      }
      if (router_api_) {
        router_api_->stop();
      }
    } else if (stage.starts_with("estimator:") && stage_index(stage) < estimators_.size()) {
      auto& e = estimators_[stage_index(stage)];
      e.service->stop();
      if (e.api) {
        e.api->stop();
      }
    } else {
      throw std::invalid_argument{"no stage named " + stage};
    }
    killed_.insert(stage);
  }

  void stop() override {
    for (auto it = estimators_.rbegin(); it != estimators_.rend(); ++it) {
      if (it->api) {
        it->api->stop();
      }
      it->service->stop();
    }
    estimators_.clear();
    if (poller_) {
      poller_->stop();
    }
    if (bridge_api_) {
      bridge_api_->stop();
    }
    if (bridge_ && bridge_alive_ && client_ && client_->ping()) {
      bridge_->stop();
    }
    bridge_alive_ = false;
    if (router_api_) {
      router_api_->stop();
    }
    if (orchestrator_) {
      orchestrator_->stop();
    }
    if (broker_api_) {
      broker_api_->stop();
    }
  }

private:
  struct Estimator {
    std::shared_ptr<estimator::EstimatorService> service;
    std::unique_ptr<estimator::EstimatorHttpApi> api;
  };

  static std::size_t stage_index(std::string const& stage) {
    try {
      return std::stoul(stage.substr(stage.find(':') + 1));
    } catch (std::exception const&) {
      return std::numeric_limits<std::size_t>::max();
    }
  }

  PipelineConfig cfg_;
  ServiceDate date_;
  std::shared_ptr<ngsi::Broker> broker_;
  std::unique_ptr<ngsi::LocalBrokerClient> client_;
  std::unique_ptr<ngsi::BrokerHttpApi> broker_api_;
  std::optional<Fixture> fixture_;
  std::shared_ptr<router::RouterEngine> engine_;
  std::unique_ptr<fetcher::Orchestrator> orchestrator_;
  std::unique_ptr<router::RouterHttpApi> router_api_;
  std::shared_ptr<rt::Bridge> bridge_;
  std::atomic<bool> bridge_alive_{true};
  std::unique_ptr<rt::BridgeHttpApi> bridge_api_;
  std::unique_ptr<router::RealtimePoller> poller_;
  std::vector<Estimator> estimators_;
  std::set<std::string> killed_;
};

std::string log_tail(std::filesystem::path const& log) {
  std::ifstream in{log};
  std::deque<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
    if (lines.size() > 5) {
      lines.pop_front();
    }
  }
  std::string out;
  for (auto const& l : lines) {
    out += (out.empty() ? "" : " | ") + l;
  }
  return out;
}

std::optional<json> get_json(std::string const& url, int timeout_ms = 1000) {
  try {
    auto const r = http::get(url, timeout_ms);
    if (r.status == 200) {
      return json::parse(r.body);
    }
  } catch (std::exception const&) {
  }
  return std::nullopt;
}

class MultiprocPipeline final : public Pipeline {
public:
  explicit MultiprocPipeline(PipelineConfig cfg)
      : cfg_{std::move(cfg)},
        date_{planning_date(cfg_)},
        binary_{cfg_.binary.value_or(self_executable())} {}
  ~MultiprocPipeline() override { stop(); }

  void start() {
    std::filesystem::create_directories(cfg_.workdir);
    run_stage("broker", [&] {
      auto const addr = address(cfg_.broker_listen);
      spawn("broker", {"broker", "--listen", addr.str()});
      urls_["broker"] = url_of(addr);
      await("broker", "/version");
      client_ = std::make_unique<ngsi::HttpBrokerClient>(urls_["broker"]);
    });
    if (cfg_.fixture) {
      run_stage("fixture", [&] {
        fixture_ = gen_fixture(cfg_.fixture->seed, cfg_.fixture->size);
        load_fixture(*client_, *fixture_);
      });
    }
    run_stage("ngsi2gtfs", [&] {
      auto const summary = cfg_.workdir / "ngsi2gtfs-summary.json";
      ChildProcess p{{binary_.string(), "ngsi2gtfs", "--broker", urls_["broker"], "--out", feed_path(cfg_).string(),
                      "--summary", summary.string()},
                     cfg_.workdir / "ngsi2gtfs.log"};
      if (auto const code = p.wait(cfg_.startup_timeout); code != 0) {
        throw std::runtime_error{"exit code " + std::to_string(code) + ": " + log_tail(p.log())};
      }
      feed_version_ = json::parse(read_file(summary)).at("feedVersion").get<std::string>();
    });
    run_stage("pointer", [&] { register_pointer(*client_, cfg_, feed_version_); });

    auto const bridge_addr = address(cfg_.bridge_listen);
    run_stage("fetcher", [&] {
      auto const router_addr = address(cfg_.router_listen);
      std::vector<std::string> args{"router", "--listen", router_addr.str(), "--date", date_.str()};
      if (cfg_.bridge) {
        args.insert(end(args), {"--realtime-url", url_of(bridge_addr) + "/gtfs-rt/trip-updates", "--realtime-ms",
                                std::to_string(cfg_.realtime_poll.count())});
      }
      spawn("router", args);
      urls_["router"] = url_of(router_addr);
      await("router", "/status");

      auto const fetcher_addr = address(std::nullopt);
      spawn("fetcher", {"gtfs-fetcher", "--broker", urls_["broker"], "--plugin-endpoint", urls_["router"],
                        "--poll-ms", std::to_string(cfg_.fetcher_poll.count()), "--today", date_.str(), "--listen",
                        fetcher_addr.str()});
      urls_["fetcher"] = url_of(fetcher_addr);
      await("fetcher", "/status");
      await("router", "/status", [](json const& s) { return s.value("feedsLoaded", 0) > 0; });
    });
    if (cfg_.bridge) {
      run_stage("bridge", [&] {
        spawn("bridge", {"gtfs-rt-bridge", "--broker", urls_["broker"], "--schedule", feed_path(cfg_).string(),
                         "--date", date_.str(), "--listen", bridge_addr.str(), "--horizon-seconds",
                         std::to_string(cfg_.bridge_horizon_seconds)});
        urls_["bridge"] = url_of(bridge_addr);
        await("bridge", "/metrics");
        auto const r = http::get(urls_["bridge"] + "/gtfs-rt/trip-updates");
        rt::decode(r.body);
      });
    }
    for (std::size_t i = 0; i < cfg_.estimators.size(); ++i) {
      auto const name = "estimator:" + std::to_string(i);
      run_stage(name, [&] {
        auto const& ec = cfg_.estimators[i];
        auto const addr = address(ec.listen);
        spawn(name, {"estimator", "--broker", urls_["broker"], "--target",
                     ec.target.entity_id + ":" + ec.target.attr + ":" + std::string{estimator::to_string(ec.target.kind)},
                     "--step-seconds", std::to_string(ec.step_seconds), "--horizon-seconds",
                     std::to_string(ec.horizon_seconds), "--cycle-ms", std::to_string(ec.cycle_interval.count()),
                     "--listen", addr.str(), "--log",
                     (cfg_.workdir / ("estimator-" + std::to_string(i) + ".jsonl")).string()});
        urls_[name] = url_of(addr);
        await(name, "/status");
      });
    }
  }

  Mode mode() const override { return Mode::multiproc; }
  ServiceDate date() const override { return date_; }
  ngsi::BrokerClient& broker() override { return *client_; }
  std::optional<Fixture> const& fixture() const override { return fixture_; }
  std::map<std::string, std::string> endpoints() const override { return urls_; }

  json route(std::string const& from, std::string const& to, epoch_t depart_after) override {
    auto const r = http::get(http::with_query(urls_.at("router") + "/route",
                                              {{"from", from}, {"to", to}, {"departAfter", to_iso8601(depart_after)}}));
    if (r.status != 200) {
      throw std::runtime_error{"router replied " + std::to_string(r.status) + ": " + r.body};
    }
    return json::parse(r.body);
  }

  bool wait_realtime(std::uint64_t notifications, std::chrono::milliseconds timeout) override {
    if (!urls_.contains("bridge")) {
      return false;
    }
    auto const deadline = std::chrono::steady_clock::now() + timeout;
    auto const poll = [&](std::string const& url, auto pred) {
      while (std::chrono::steady_clock::now() < deadline) {
        if (auto const j = get_json(url); j && pred(*j)) {
          return true;
        }
        std::this_thread::sleep_for(10ms);
      }
      return false;
    };
    if (!poll(urls_["bridge"] + "/metrics",
              [&](json const& m) { return m.value("notificationsApplied", std::uint64_t{0}) >= notifications; })) {
      return false;
    }
    std::uint64_t base = 0;
    if (!poll(urls_["router"] + "/status", [&](json const& s) {
          base = s.value("realtimeUpdates", std::uint64_t{0});
          return true;
        })) {
      return false;
    }
    // The second pull after `base` started after the bridge had the update.
    return poll(urls_["router"] + "/status",
                [&](json const& s) { return s.value("realtimeUpdates", std::uint64_t{0}) >= base + 2; });
  }

  std::vector<StageStatus> status() override {
    std::vector<StageStatus> out;
    for (auto const& [name, child] : children_) {
      if (!child->running()) {
        out.push_back({name, Health::down, {}, "exited with " + std::to_string(child->exit_code().value_or(-1))});
        continue;
      }
      auto const path = name == "broker" ? "/stats" : name == "bridge" ? "/metrics" : "/status";
      auto const body = get_json(urls_.at(name) + path);
      if (!body) {
        out.push_back({name, Health::degraded, {}, "not answering " + std::string{path}});
        continue;
      }
      if (name == "broker") {
        out.push_back({name, Health::up, broker_counters(*body), ""});
      } else if (name == "fetcher") {
        out.push_back(fetcher_status(*body));
      } else if (name == "router") {
        out.push_back(router_status(*body));
      } else if (name == "bridge") {
        out.push_back(bridge_status(*body));
      } else {
        out.push_back(estimator_status(name, *body));
      }
    }
    // Report in pipeline order rather than spawn order.
    std::stable_sort(begin(out), end(out),
                     [](StageStatus const& a, StageStatus const& b) { return rank(a.stage) < rank(b.stage); });
    apply_dependencies(out, cfg_.bridge);
    return out;
  }

  void kill_stage(std::string const& stage) override {
    for (auto& [name, child] : children_) {
      if (name == stage) {
        child->kill();
        return;
      }
    }
    throw std::invalid_argument{"no stage named " + stage};
  }

  void stop() override {
    for (auto it = children_.rbegin(); it != children_.rend(); ++it) {
      it->second->terminate();
    }
  }

private:
  static int rank(std::string const& stage) {
    if (stage == "broker") {
      return 0;
    }
    if (stage == "fetcher") {
      return 1;
    }
    if (stage == "bridge") {
      return 2;
    }
    if (stage == "router") {
      return 3;
    }
    return 4;
  }

  static http::ListenAddress address(std::optional<http::ListenAddress> const& wanted) {
    auto a = wanted.value_or(http::ListenAddress{});
    if (a.port == 0) {
      a.port = free_port(a.host == "0.0.0.0" ? "127.0.0.1" : a.host);
    }
    return a;
  }

  static std::string url_of(http::ListenAddress const& a) {
    return "http://" + (a.host == "0.0.0.0" ? std::string{"127.0.0.1"} : a.host) + ":" + std::to_string(a.port);
  }

  void spawn(std::string const& stage, std::vector<std::string> args) {
    args.insert(begin(args), binary_.string());
    auto file = stage;
    std::replace(begin(file), end(file), ':', '-');
    auto const log = cfg_.workdir / (file + ".log");
    children_.emplace_back(stage, std::make_unique<ChildProcess>(std::move(args), log));
  }

  ChildProcess& child(std::string const& stage) {
    for (auto& [name, c] : children_) {
      if (name == stage) {
        return *c;
      }
    }
    throw std::logic_error{"no child " + stage};
  }

  void await(std::string const& stage, std::string const& path,
             std::function<bool(json const&)> const& ready = [](json const&) { return true; }) {
    auto& c = child(stage);
    auto const deadline = std::chrono::steady_clock::now() + cfg_.startup_timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      if (!c.running()) {
        throw std::runtime_error{"exited with " + std::to_string(c.exit_code().value_or(-1)) + ": " +
                                 log_tail(c.log())};
      }
      if (auto const j = get_json(urls_.at(stage) + path, 500); j && ready(*j)) {
        return;
      }
      std::this_thread::sleep_for(20ms);
    }
    throw std::runtime_error{"not ready after " + std::to_string(cfg_.startup_timeout.count()) + " ms: " +
                             log_tail(c.log())};
  }

  PipelineConfig cfg_;
  ServiceDate date_;
  std::filesystem::path binary_;
  std::vector<std::pair<std::string, std::unique_ptr<ChildProcess>>> children_;
  std::map<std::string, std::string> urls_;
  std::unique_ptr<ngsi::HttpBrokerClient> client_;
  std::optional<Fixture> fixture_;
  std::string feed_version_;
};

/// The pipeline answers a route query, using the first fixture probe when
/// there is one.
void check_healthy(Pipeline& p) {
  run_stage("health", [&] {
    if (p.fixture() && !p.fixture()->probes.empty()) {
      auto const& probe = p.fixture()->probes.front();
      auto const body = p.route(probe.from_stop, probe.to_stop, p.date().midnight_epoch() + probe.depart_after);
      if (!body.value("found", false)) {
        throw std::runtime_error{"no journey for the first fixture probe: " + body.dump()};
      }
    }
    for (auto const& s : p.status()) {
      if (s.health == Health::down) {
        throw std::runtime_error{s.stage + " is down: " + s.detail};
      }
    }
  });
}

}  // namespace

std::string_view to_string(Health h) {
  switch (h) {
    case Health::up: return "up";
    case Health::degraded: return "degraded";
    case Health::down: return "down";
  }
  return "down";
}

std::string format_status_line(StageStatus const& s) {
  std::ostringstream out;
  out << s.stage;
  for (auto n = s.stage.size(); n < 12; ++n) {
    out << ' ';
  }
  auto const h = to_string(s.health);
  out << h;
  for (auto n = h.size(); n < 10; ++n) {
    out << ' ';
  }
  auto first = true;
  for (auto const& [k, v] : s.counters.items()) {
    out << (first ? "" : " ") << k << '=' << v.dump();
    first = false;
  }
  if (!s.detail.empty()) {
    out << (first ? "" : " ") << "(" << s.detail << ")";
  }
  return out.str();
}

std::unique_ptr<Pipeline> start_pipeline(PipelineConfig const& config, Mode mode) {
  auto const launch = [&](auto p) -> std::unique_ptr<Pipeline> {
    try {
      p->start();
      check_healthy(*p);
    } catch (...) {
      p->stop();
      throw;
    }
    return p;
  };
  if (mode == Mode::inproc) {
    return launch(std::make_unique<InprocPipeline>(config));
  }
  return launch(std::make_unique<MultiprocPipeline>(config));
}

}  // namespace atomic::compose
