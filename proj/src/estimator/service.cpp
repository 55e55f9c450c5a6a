#include "atomic/estimator/service.hpp"

#include <spdlog/spdlog.h>

#include "atomic/common/http_client.hpp"

namespace atomic::estimator {

namespace {

constexpr epoch_t kHistoryEnd = 253402300799;  // 9999-12-31T23:59:59Z

nlohmann::json target_json(std::string const& entity_id, std::string const& attr) {
  return {{"entityId", entity_id}, {"attr", attr}};
}

}  // namespace

Target Target::parse(std::string_view text) {
  auto const last = text.rfind(':');
  auto const mid = last == std::string_view::npos || last == 0 ? std::string_view::npos : text.rfind(':', last - 1);
  if (mid == std::string_view::npos || mid == 0 || last == mid + 1) {
    throw std::invalid_argument{"target must be entityId:attr:kind, got '" + std::string{text} + "'"};
  }
  return {std::string{text.substr(0, mid)}, std::string{text.substr(mid + 1, last - mid - 1)},
          parse_target_kind(text.substr(last + 1))};
}

std::string prediction_entity_id(std::string const& entity_id, std::string const& attr) {
  return "urn:ngsi:Prediction:" + entity_id + ":" + attr;
}

ngsi::ContextEntity to_context(Prediction const& p) {
  ngsi::ContextEntity e{prediction_entity_id(p.entity_id, p.target_attr), "Prediction", {}};
  e.set("refEntity", p.entity_id)
      .set("targetAttr", p.target_attr)
      .set("predictedValue", p.predicted_value, p.issued_at)
      .set("horizonSeconds", static_cast<double>(p.horizon_seconds))
      .set("issuedAt", static_cast<double>(p.issued_at))
      .set("modelId", p.model_id);
  return e;
}

Prediction prediction_from_context(ngsi::ContextEntity const& e) {
  auto const need_number = [&](char const* name) {
    auto const v = e.number(name);
    if (!v) {
      throw std::invalid_argument{e.id + " lacks numeric " + name};
    }
    return *v;
  };
  auto const need_text = [&](char const* name) {
    auto v = e.text(name);
    if (!v) {
      throw std::invalid_argument{e.id + " lacks text " + name};
    }
    return *v;
  };
  return {need_text("refEntity"),
          need_text("targetAttr"),
          static_cast<epoch_t>(need_number("horizonSeconds")),
          need_number("predictedValue"),
          static_cast<epoch_t>(need_number("issuedAt")),
          need_text("modelId")};
}

EstimatorService::EstimatorService(ngsi::BrokerClient& broker, std::vector<Target> targets, EstimatorOptions opts,
                                   std::shared_ptr<PredictionModel const> model)
    : broker_{broker},
      targets_{std::move(targets)},
      opts_{std::move(opts)},
      model_{model ? std::move(model)
                   : std::make_shared<SeasonalRidgeModel const>(
                         SeasonalRidgeOptions{static_cast<int>(opts_.season_seconds / opts_.step_seconds), 1e-3})},
      log_{opts_.clock, opts_.log_path} {
  check_horizon(opts_.horizon_seconds, opts_.step_seconds);
  if (opts_.season_seconds % opts_.step_seconds != 0) {
    throw std::invalid_argument{"season must be a multiple of the step"};
  }
}

EstimatorService::~EstimatorService() { stop(); }

Target const* EstimatorService::find(std::string const& entity_id, std::string const& attr) const {
  for (auto const& t : targets_) {
    if (t.entity_id == entity_id && t.attr == attr) {
      return &t;
    }
  }
  return nullptr;
}

Harvest EstimatorService::harvest_for(Target const& t, epoch_t now) {
  HarvestOptions ho;
  ho.grid = {opts_.step_seconds, opts_.max_fill_steps};
  ho.min_points = static_cast<std::size_t>(2 * opts_.season_seconds / opts_.step_seconds);
  auto h = harvest(broker_, t.entity_id, t.attr, opts_.window_seconds, now, ho);
  if (t.kind == TargetKind::parking && t.attr == "availableSpots") {
    auto const entity = broker_.get(t.entity_id);
    auto const total = entity ? entity->number("totalSpots") : std::nullopt;
    if (!total || *total <= 0) {
      throw EstimatorError{EstimatorError::Kind::invalid_series, t.entity_id + " has no positive totalSpots"};
    }
    for (auto& s : h.series.samples) {
      s.value /= *total;
    }
  }
  return h;
}

Prediction EstimatorService::estimate(Target const& t) {
  auto const now = opts_.clock();
  auto const target = target_json(t.entity_id, t.attr);
  Harvest h;
  try {
    h = harvest_for(t, now);
  } catch (std::exception const& e) {
    log_.append(Component::harvester, EventKind::error, {{"target", target}, {"stage", "harvest"}, {"error", e.what()}});
    throw;
  }
  log_.append(Component::harvester, EventKind::harvest,
              {{"target", target},
               {"points", h.series.samples.size()},
               {"filled", h.gaps.filled},
               {"gaps", h.gaps.gaps.size()}});

  std::unique_ptr<FittedModel> fitted;
  try {
    fitted = model_->fit(h.series);
  } catch (std::exception const& e) {
    log_.append(Component::engine, EventKind::error, {{"target", target}, {"stage", "fit"}, {"error", e.what()}});
    throw;
  }
  log_.append(Component::engine, EventKind::fit, {{"target", target}, {"modelId", model_->id()}});

  Prediction p{t.entity_id, t.attr, opts_.horizon_seconds,
               clamp_prediction(t.kind, fitted->predict(opts_.horizon_seconds)), now, model_->id()};
  log_.append(Component::engine, EventKind::predict,
              {{"target", target}, {"value", p.predicted_value}, {"issuedAt", p.issued_at}});
  return p;
}

std::string EstimatorService::persist(Prediction const& p) {
  auto const entity = to_context(p);
  try {
    broker_.upsert(entity);
  } catch (std::exception const& e) {
    log_.append(Component::cache, EventKind::error,
                {{"target", target_json(p.entity_id, p.target_attr)}, {"stage", "persist"}, {"error", e.what()}});
    throw;
  }
  {
    std::lock_guard lock{mutex_};
    last_persisted_[entity.id] = p;
    ++persisted_;
  }
  log_.append(Component::cache, EventKind::persist,
              {{"target", target_json(p.entity_id, p.target_attr)},
               {"value", p.predicted_value},
               {"issuedAt", p.issued_at}});
  return entity.id;
}

std::size_t EstimatorService::run_cycle() {
  std::size_t done = 0;
  for (auto const& t : targets_) {
    try {
      persist(estimate(t));
      ++done;
    } catch (std::exception const& e) {
      spdlog::warn("estimator: {}/{}: {}", t.entity_id, t.attr, e.what());
      std::lock_guard lock{mutex_};
      ++failures_;
    }
  }
  return done;
}

Served EstimatorService::serve(std::string const& entity_id, std::string const& attr) {
  auto const* t = find(entity_id, attr);
  if (t == nullptr) {
    throw UnknownTarget{"no estimator target " + entity_id + "/" + attr};
  }
  auto const id = prediction_entity_id(entity_id, attr);
  auto const now = opts_.clock();
  auto const target = target_json(entity_id, attr);
  auto const served = [&](Prediction const& p, char const* source) {
    log_.append(Component::api, EventKind::serve,
                {{"target", target}, {"value", p.predicted_value}, {"issuedAt", p.issued_at}, {"source", source}});
  };

  std::optional<Prediction> cached;
  bool broker_up = true;
  try {
    if (auto const e = broker_.get(id)) {
      cached = prediction_from_context(*e);
    }
  } catch (ngsi::BrokerError const&) {
    broker_up = false;
  } catch (std::invalid_argument const& e) {
    log_.append(Component::cache, EventKind::error, {{"target", target}, {"stage", "read"}, {"error", e.what()}});
  }
  if (!broker_up) {
    std::lock_guard lock{mutex_};
    if (auto const it = last_persisted_.find(id); it != end(last_persisted_)) {
      cached = it->second;
    }
  }

  if (cached && now - cached->issued_at <= opts_.step_seconds) {
    served(*cached, "cache");
    return {*cached, false};
  }
  if (broker_up) {
    try {
      auto const fresh = estimate(*t);
      try {
        persist(fresh);
      } catch (std::exception const&) {
        // Already logged; the fresh value is still newer than any cache.
      }
      served(fresh, "recomputed");
      return {fresh, true};
    } catch (std::exception const& e) {
      if (!cached) {
        throw Unavailable{e.what()};
      }
    }
  }
  if (!cached) {
    throw Unavailable{"broker unreachable and nothing cached for " + entity_id + "/" + attr};
  }
  served(*cached, "cache");
  return {*cached, false};
}

nlohmann::json EstimatorService::history(std::string const& entity_id) {
  nlohmann::json out = nlohmann::json::array();
  bool known = false;
  for (auto const& t : targets_) {
    if (t.entity_id != entity_id) {
      continue;
    }
    known = true;
    for (auto const& r :
         broker_.history(prediction_entity_id(t.entity_id, t.attr), "predictedValue", 0, kHistoryEnd)) {
      if (auto const* v = std::get_if<double>(&r.value)) {
        out.push_back({{"attr", t.attr}, {"predictedValue", *v}, {"issuedAt", to_iso8601(r.observed_at)}});
      }
    }
  }
  if (!known) {
    throw UnknownTarget{"no estimator target on " + entity_id};
  }
  return out;
}

void EstimatorService::start() {
  if (thread_.joinable()) {
    return;
  }
  {
    std::lock_guard lock{mutex_};
    stopping_ = false;
  }
  thread_ = std::thread{[this] {
    std::unique_lock lock{mutex_};
    while (!stopping_) {
      lock.unlock();
      run_cycle();
      lock.lock();
      wake_.wait_for(lock, opts_.cycle_interval, [this] { return stopping_; });
    }
  }};
}

void EstimatorService::stop() {
  {
    std::lock_guard lock{mutex_};
    stopping_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) {
    thread_.join();
  }
}

std::uint64_t EstimatorService::persisted() const {
  std::lock_guard lock{mutex_};
  return persisted_;
}

nlohmann::json EstimatorService::status_json() const {
  nlohmann::json targets = nlohmann::json::array();
  for (auto const& t : targets_) {
    targets.push_back({{"entityId", t.entity_id}, {"attr", t.attr}, {"kind", to_string(t.kind)}});
  }
  std::lock_guard lock{mutex_};
  return {{"targets", targets},
          {"predictionsPersisted", persisted_},
          {"cycleFailures", failures_},
          {"events", log_.size()},
          {"modelId", model_->id()}};
}

}  // namespace atomic::estimator
