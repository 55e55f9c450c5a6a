#include "atomic/router/engine.hpp"

#include <spdlog/spdlog.h>

#include "atomic/common/http_client.hpp"

namespace atomic::router {

RouterEngine::RouterEngine(RouterOptions opts) : opts_{std::move(opts)} {}

ServiceDate RouterEngine::planning_date() const {
  return opts_.date ? *opts_.date : ServiceDate::from_epoch(opts_.clock());
}

void RouterEngine::load_feed(fetcher::FeedDelivery const& d) {
  std::shared_ptr<TransitGraph const> base;
  try {
    base = std::make_shared<TransitGraph const>(build_graph(d.feed, planning_date()));
  } catch (std::exception const& e) {
    throw fetcher::PluginError{e.what()};
  }
  std::lock_guard lock{mutex_};
  base_ = base;
  current_ = realtime_ ? std::make_shared<TransitGraph const>(router::apply_realtime(*base_, *realtime_)) : base_;
  feed_id_ = d.feed_id;
  feed_version_ = d.version;
  ++loads_;
  spdlog::info("router: loaded feed {} version {} ({} connections)", d.feed_id, d.version,
               base_->connections.size());
}

void RouterEngine::apply_realtime(rt::FeedMessage const& msg) {
  std::lock_guard lock{mutex_};
  realtime_ = msg;
  ++realtime_updates_;
  realtime_at_ = opts_.clock();
  if (base_) {
    current_ = std::make_shared<TransitGraph const>(router::apply_realtime(*base_, msg));
  }
}

std::shared_ptr<TransitGraph const> RouterEngine::graph() const {
  std::lock_guard lock{mutex_};
  return current_;
}

std::optional<Journey> RouterEngine::route(std::string const& from, std::string const& to,
                                           epoch_t depart_after) const {
  auto const g = graph();
  if (!g) {
    throw NoFeedLoaded{"no feed loaded"};
  }
  return earliest_arrival(*g, from, to, depart_after);
}

nlohmann::json RouterEngine::status_json() const {
  std::lock_guard lock{mutex_};
  nlohmann::json j{{"planningDate", planning_date().str()},
                   {"feedsLoaded", loads_},
                   {"realtimeUpdates", realtime_updates_},
                   {"feedId", nullptr},
                   {"feedVersion", nullptr},
                   {"connections", 0},
                   {"delays", 0}};
  if (current_) {
    j["feedId"] = feed_id_;
    j["feedVersion"] = feed_version_;
    j["connections"] = current_->connections.size();
    j["delays"] = current_->delays.size();
  }
  if (realtime_at_) {
    j["lastRealtime"] = to_iso8601(*realtime_at_);
  }
  return j;
}

RealtimePoller::RealtimePoller(RouterEngine& engine, Source source, std::chrono::milliseconds interval)
    : engine_{engine}, source_{std::move(source)}, interval_{interval} {}

RealtimePoller::~RealtimePoller() { stop(); }

bool RealtimePoller::poll_once() {
  try {
    engine_.apply_realtime(rt::decode(source_()));
  } catch (std::exception const& e) {
    spdlog::warn("router: realtime pull failed, keeping last delays: {}", e.what());
    std::lock_guard lock{mutex_};
    ++failures_;
    return false;
  }
  std::lock_guard lock{mutex_};
  ++applied_;
  return true;
}

void RealtimePoller::start() {
  if (thread_.joinable()) {
    return;
  }
  stopping_ = false;
  thread_ = std::thread{[this] {
    std::unique_lock lock{mutex_};
    while (!stopping_) {
      lock.unlock();
      poll_once();
      lock.lock();
      wake_.wait_for(lock, interval_, [this] { return stopping_; });
    }
  }};
}

void RealtimePoller::stop() {
  {
    std::lock_guard lock{mutex_};
    stopping_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) {
    thread_.join();
  }
}

std::uint64_t RealtimePoller::applied() const {
  std::lock_guard lock{mutex_};
  return applied_;
}

std::uint64_t RealtimePoller::failures() const {
  std::lock_guard lock{mutex_};
  return failures_;
}

RealtimePoller::Source RealtimePoller::http_source(std::string url) {
  return [url = std::move(url)] {
    auto res = http::get(url, 5000);
    if (res.status != 200) {
      throw std::runtime_error{"GET " + url + ": HTTP " + std::to_string(res.status)};
    }
    return std::move(res.body);
  };
}

}  // namespace atomic::router
