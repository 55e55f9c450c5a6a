#include "atomic/estimator/event_log.hpp"

namespace atomic::estimator {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::harvester: return "harvester";
    case Component::engine: return "engine";
    case Component::cache: return "cache";
    case Component::api: return "api";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::harvest: return "harvest";
    case EventKind::fit: return "fit";
    case EventKind::predict: return "predict";
    case EventKind::persist: return "persist";
    case EventKind::serve: return "serve";
    case EventKind::error: return "error";
  }
  return "?";
}

nlohmann::json to_json(EventRecord const& r) {
  return {{"epoch", r.epoch},
          {"component", to_string(r.component)},
          {"kind", to_string(r.kind)},
          {"detail", r.detail}};
}

EventLog::EventLog(Clock clock, std::optional<std::filesystem::path> jsonl) : clock_{std::move(clock)} {
  if (jsonl) {
    out_.open(*jsonl, std::ios::app);
    if (!out_) {
      throw std::runtime_error{"cannot open event log " + jsonl->string()};
    }
  }
}

void EventLog::append(Component c, EventKind k, nlohmann::json detail) {
  auto const now = clock_();
  std::lock_guard lock{mutex_};
  auto& last = last_[static_cast<std::size_t>(c)];
  last = std::max(last, now);
  records_.push_back({last, c, k, std::move(detail)});
  if (out_.is_open()) {
    out_ << to_json(records_.back()).dump() << '\n';
    out_.flush();
  }
}

std::vector<EventRecord> EventLog::records() const {
  std::lock_guard lock{mutex_};
  return records_;
}

std::size_t EventLog::size() const {
  std::lock_guard lock{mutex_};
  return records_.size();
}

std::size_t EventLog::count(EventKind k) const {
  std::lock_guard lock{mutex_};
  return static_cast<std::size_t>(
      std::count_if(begin(records_), end(records_), [k](EventRecord const& r) { return r.kind == k; }));
}

}  // namespace atomic::estimator
