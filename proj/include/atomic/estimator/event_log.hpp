#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "atomic/common/time.hpp"

namespace atomic::estimator {

enum class Component { harvester, engine, cache, api };
enum class EventKind { harvest, fit, predict, persist, serve, error };

std::string_view to_string(Component c);
std::string_view to_string(EventKind k);

struct EventRecord {
  epoch_t epoch{0};
  Component component{Component::api};
  EventKind kind{EventKind::error};
  nlohmann::json detail;
};

nlohmann::json to_json(EventRecord const& r);

/// Append-only. Epochs never decrease per component, even if the clock does.
/// With a path, every record is also appended to it as one JSON line.
class EventLog {
public:
  explicit EventLog(Clock clock = system_now, std::optional<std::filesystem::path> jsonl = std::nullopt);

  void append(Component c, EventKind k, nlohmann::json detail = nlohmann::json::object());

  std::vector<EventRecord> records() const;
  std::size_t size() const;
  std::size_t count(EventKind k) const;

private:
  Clock clock_;
  mutable std::mutex mutex_;
  std::vector<EventRecord> records_;
  std::array<epoch_t, 4> last_{};
  std::ofstream out_;
};

}  // namespace atomic::estimator
