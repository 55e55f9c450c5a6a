#include "atomic/fetcher/fetcher.hpp"

#include <spdlog/spdlog.h>

#include "atomic/common/hash.hpp"
#include "atomic/common/http_client.hpp"
#include "atomic/common/io.hpp"
#include "atomic/mobility/consistency.hpp"

namespace atomic::fetcher {

namespace {

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool supported_scheme(std::string_view url) {
  return starts_with(url, "file://") || starts_with(url, "http://") || starts_with(url, "https://");
}

}  // namespace

Resolution resolve_pointers(ngsi::BrokerClient& broker) {
  ngsi::EntityQuery q;
  q.type = "GtfsFeedPointer";
  Resolution out;
  for (auto const& ctx : broker.query(q)) {
    FeedPointer p;
    try {
      p = mobility::from_context_as<FeedPointer>(ctx);
    } catch (std::exception const& e) {
      out.skipped.push_back({ctx.id, e.what()});
      continue;
    }
    auto const report = mobility::validate_consistency(std::vector<mobility::TypedEntity>{p});
    if (!report.empty()) {
      out.skipped.push_back({ctx.id, report.summary()});
      continue;
    }
    if (!supported_scheme(p.source_url)) {
      out.skipped.push_back({ctx.id, "unsupported sourceUrl scheme: " + p.source_url});
      continue;
    }
    out.pointers.push_back(std::move(p));
  }
  std::sort(begin(out.pointers), end(out.pointers),
            [](FeedPointer const& a, FeedPointer const& b) { return a.feed_id < b.feed_id; });
  return out;
}

std::string to_string(FeedStatus s) {
  switch (s) {
    case FeedStatus::fresh: return "fresh";
    case FeedStatus::expired: return "expired";
    case FeedStatus::fetch_failed: return "fetch-failed";
  }
  return "?";
}

nlohmann::json to_json(FeedState const& s) {
  nlohmann::json j{{"feedId", s.feed_id},
                   {"status", to_string(s.status)},
                   {"lastVersion", nullptr},
                   {"lastLoadedAt", nullptr},
                   {"lastCheckedAt", to_iso8601(s.last_checked_at)}};
  if (s.last_version) {
    j["lastVersion"] = *s.last_version;
  }
  if (s.last_loaded_at) {
    j["lastLoadedAt"] = to_iso8601(*s.last_loaded_at);
  }
  if (!s.detail.empty()) {
    j["detail"] = s.detail;
  }
  return j;
}

std::string fetch_source(std::string const& url) {
  if (starts_with(url, "file://")) {
    try {
      return read_file(url.substr(7));
    } catch (IoError const& e) {
      throw FetchError{e.what()};
    }
  }
  if (starts_with(url, "http://") || starts_with(url, "https://")) {
    http::Response res;
    try {
      res = http::get(url, 30000);
    } catch (std::exception const& e) {
      throw FetchError{"GET " + url + ": " + e.what()};
    }
    if (res.status != 200) {
      throw FetchError{"GET " + url + ": HTTP " + std::to_string(res.status)};
    }
    return std::move(res.body);
  }
  throw FetchError{"unsupported sourceUrl scheme: " + url};
}

FeedFetcher::FeedFetcher(RoutingEnginePlugin& plugin, Clock clock) : plugin_{plugin}, clock_{std::move(clock)} {}

FeedFetcher::Slot& FeedFetcher::slot(std::string const& feed_id) {
  std::lock_guard lock{slots_mutex_};
  auto& s = slots_[feed_id];
  if (!s) {
    s = std::make_unique<Slot>();
    s->state.feed_id = feed_id;
  }
  return *s;
}

FeedState FeedFetcher::fetch_and_load(FeedPointer const& pointer, ServiceDate today) {
  auto& s = slot(pointer.feed_id);
  std::lock_guard serial{s.serial};

  auto next = [&] {
    std::lock_guard lock{slots_mutex_};
    return s.state;
  }();
  next.last_checked_at = clock_();
  auto const outcome = [&](FeedStatus status, std::string detail) {
    next.status = status;
    next.detail = std::move(detail);
    if (status == FeedStatus::fetch_failed) {
      spdlog::warn("feed {}: {}", pointer.feed_id, next.detail);
    }
    std::lock_guard lock{slots_mutex_};
    s.state = next;
    return next;
  };

  if (today < pointer.valid_from || pointer.valid_until < today) {
    return outcome(FeedStatus::expired, "pointer valid " + pointer.valid_from.str() + ".." +
                                            pointer.valid_until.str() + ", today " + today.str());
  }

  FeedDelivery d;
  d.feed_id = pointer.feed_id;
  try {
    d.bytes = fetch_source(pointer.source_url);
    d.feed = gtfs::read_feed(d.bytes);
  } catch (std::exception const& e) {
    return outcome(FeedStatus::fetch_failed, e.what());
  }
  if (!gtfs::feed_valid_on(d.feed, today)) {
    return outcome(FeedStatus::expired, "no calendar entry covers " + today.str());
  }

  d.version = pointer.version.empty() ? sha256_hex(d.bytes) : pointer.version;
  if (next.last_version == d.version) {
    return outcome(FeedStatus::fresh, {});
  }
  try {
    plugin_.load_feed(d);
  } catch (std::exception const& e) {
    return outcome(FeedStatus::fetch_failed, std::string{"plugin rejected version "} + d.version + ": " + e.what());
  }
  next.last_version = d.version;
  next.last_loaded_at = next.last_checked_at;
  spdlog::info("feed {}: loaded version {}", pointer.feed_id, d.version);
  return outcome(FeedStatus::fresh, {});
}

std::optional<FeedState> FeedFetcher::state(std::string const& feed_id) const {
  std::lock_guard lock{slots_mutex_};
  auto const it = slots_.find(feed_id);
  if (it == end(slots_)) {
    return std::nullopt;
  }
  return it->second->state;
}

std::vector<FeedState> FeedFetcher::states() const {
  std::lock_guard lock{slots_mutex_};
  std::vector<FeedState> out;
  for (auto const& [id, s] : slots_) {
    out.push_back(s->state);
  }
  return out;
}

}  // namespace atomic::fetcher
