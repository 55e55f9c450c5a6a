#include "atomic/fetcher/orchestrator.hpp"

#include <future>

#include <spdlog/spdlog.h>

namespace atomic::fetcher {

void FetcherConfig::validate() const {
  if (broker_endpoint.empty()) {
    throw ConfigError{"broker endpoint is required"};
  }
  if (poll_interval_seconds < 1) {
    throw ConfigError{"poll interval must be at least 1 second"};
  }
  if (plugin_endpoint.empty()) {
    throw ConfigError{"plugin endpoint is required"};
  }
}

Orchestrator::Orchestrator(ngsi::BrokerClient& broker, RoutingEnginePlugin& plugin, OrchestratorOptions opts)
    : broker_{broker}, opts_{std::move(opts)}, fetcher_{plugin, opts_.clock} {}

Orchestrator::~Orchestrator() { stop(); }

ServiceDate Orchestrator::today() const {
  return opts_.today_override ? *opts_.today_override : ServiceDate::from_epoch(opts_.clock());
}

PollReport Orchestrator::poll_once() {
  std::lock_guard serial{poll_mutex_};
  return poll_locked();
}

PollReport Orchestrator::poll_locked() {
  PollReport report;
  Resolution r;
  try {
    r = resolve_pointers(broker_);
  } catch (std::exception const& e) {
    spdlog::warn("fetcher poll failed: {}", e.what());
    std::lock_guard lock{mutex_};
    ++polls_;
    ++failed_polls_;
    last_error_ = e.what();
    report.error = e.what();
    report.states = fetcher_.states();
    return report;
  }

  auto const day = today();
  std::vector<std::future<FeedState>> pending;
  for (auto const& p : r.pointers) {
    pending.push_back(std::async(std::launch::async, [this, p, day] { return fetcher_.fetch_and_load(p, day); }));
  }
  for (auto& f : pending) {
    report.states.push_back(f.get());
  }
  for (auto const& s : r.skipped) {
    spdlog::warn("skipped feed pointer {}: {}", s.id, s.reason);
  }
  report.ok = true;
  report.skipped = std::move(r.skipped);

  std::lock_guard lock{mutex_};
  ++polls_;
  last_error_.clear();
  last_skipped_ = report.skipped;
  return report;
}

void Orchestrator::start() {
  if (running()) {
    return;
  }
  {
    std::lock_guard serial{poll_mutex_};
    auto const first = poll_locked();
    if (!first.ok) {
      throw ngsi::BrokerError{ngsi::Errc::unavailable, first.error};
    }
  }
  {
    std::lock_guard lock{mutex_};
    stopping_ = false;
  }
  thread_ = std::thread{[this] { loop(); }};
}

void Orchestrator::loop() {
  std::unique_lock lock{mutex_};
  while (!stopping_) {
    if (wake_.wait_for(lock, opts_.poll_interval, [this] { return stopping_; })) {
      break;
    }
    lock.unlock();
    {
      std::lock_guard serial{poll_mutex_};
      bool stop_now = false;
      {
        std::lock_guard check{mutex_};
        stop_now = stopping_;
      }
      if (!stop_now) {
        poll_locked();
      }
    }
    lock.lock();
  }
}

void Orchestrator::stop() {
  {
    std::lock_guard lock{mutex_};
    stopping_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) {
    thread_.join();
  }
}

std::uint64_t Orchestrator::polls() const {
  std::lock_guard lock{mutex_};
  return polls_;
}

std::uint64_t Orchestrator::failed_polls() const {
  std::lock_guard lock{mutex_};
  return failed_polls_;
}

nlohmann::json Orchestrator::status_json() const {
  nlohmann::json feeds = nlohmann::json::array();
  for (auto const& s : fetcher_.states()) {
    feeds.push_back(to_json(s));
  }
  std::lock_guard lock{mutex_};
  nlohmann::json skipped = nlohmann::json::array();
  for (auto const& s : last_skipped_) {
    skipped.push_back({{"id", s.id}, {"reason", s.reason}});
  }
  nlohmann::json j{{"polls", polls_}, {"failedPolls", failed_polls_}, {"feeds", feeds}, {"skipped", skipped}};
  if (!last_error_.empty()) {
    j["lastError"] = last_error_;
  }
  return j;
}

}  // namespace atomic::fetcher
