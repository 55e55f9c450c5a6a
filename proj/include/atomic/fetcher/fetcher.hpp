#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "atomic/common/time.hpp"
#include "atomic/fetcher/plugin.hpp"
#include "atomic/mobility/model.hpp"
#include "atomic/ngsi/client.hpp"

namespace atomic::fetcher {

using mobility::FeedPointer;

struct SkippedPointer {
  std::string id;
  std::string reason;
};

struct Resolution {
  std::vector<FeedPointer> pointers;  // ordered by feed id
  std::vector<SkippedPointer> skipped;
};

/// Every GtfsFeedPointer in the broker. Pointers that fail conversion, have
/// inverted validity or use a scheme other than file, http or https are
/// skipped and reported. Throws BrokerError(unavailable).
Resolution resolve_pointers(ngsi::BrokerClient& broker);

enum class FeedStatus { fresh, expired, fetch_failed };

std::string to_string(FeedStatus s);

struct FeedState {
  std::string feed_id;
  std::optional<std::string> last_version;  // set once a load succeeded
  std::optional<epoch_t> last_loaded_at;
  FeedStatus status{FeedStatus::fetch_failed};
  std::string detail;  // why the last attempt was not fresh
  epoch_t last_checked_at{0};
};

nlohmann::json to_json(FeedState const& s);

struct FetchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Archive bytes behind a file://, http:// or https:// URL.
std::string fetch_source(std::string const& url);

/// Remembers what each feed id last loaded into the plugin, so a version is
/// delivered at most once. Calls for the same feed id are serialized; calls
/// for different ids may run concurrently.
class FeedFetcher {
public:
  explicit FeedFetcher(RoutingEnginePlugin& plugin, Clock clock = system_now);

  /// Never throws: every outcome is encoded in the returned state. A failed
  /// attempt leaves the previously loaded version in place at the plugin.
  FeedState fetch_and_load(FeedPointer const& pointer, ServiceDate today);

  std::optional<FeedState> state(std::string const& feed_id) const;
  std::vector<FeedState> states() const;

private:
  struct Slot {
    std::mutex serial;
    FeedState state;
  };
  Slot& slot(std::string const& feed_id);

  RoutingEnginePlugin& plugin_;
  Clock clock_;
  mutable std::mutex slots_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

}  // namespace atomic::fetcher
