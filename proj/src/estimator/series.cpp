#include "atomic/estimator/series.hpp"

#include <algorithm>
#include <cmath>

namespace atomic::estimator {

void TimeSeries::validate() const {
  if (samples.empty()) {
    throw EstimatorError{EstimatorError::Kind::invalid_series, "series " + entity_id + "/" + attr_name + " is empty"};
  }
  for (auto i = 0U; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].value)) {
      throw EstimatorError{EstimatorError::Kind::invalid_series, "non-finite value at " + to_iso8601(samples[i].t)};
    }
    if (i > 0 && samples[i].t <= samples[i - 1].t) {
      throw EstimatorError{EstimatorError::Kind::invalid_series, "timestamps not increasing at " +
                                                                      to_iso8601(samples[i].t)};
    }
  }
}

TimeSeries regularize(std::string entity_id, std::string attr, std::vector<Sample> raw, RegularizeOptions const& opts,
                      GapReport* report) {
  TimeSeries out{std::move(entity_id), std::move(attr), {}, opts.step_seconds};
  GapReport local;
  auto& rep = report != nullptr ? *report : local;
  rep = {};
  if (raw.empty()) {
    return out;
  }
  std::stable_sort(begin(raw), end(raw), [](Sample const& a, Sample const& b) { return a.t < b.t; });

  auto const step = opts.step_seconds;
  auto const bucket = [step](epoch_t t) { return t >= 0 ? t / step : (t - step + 1) / step; };

  std::vector<Sample> points;  // one per occupied bucket, last sample wins
  for (auto const& s : raw) {
    auto const t = bucket(s.t) * step;
    if (!points.empty() && points.back().t == t) {
      points.back().value = s.value;
    } else {
      points.push_back({t, s.value});
    }
  }

  for (auto const& p : points) {
    if (!out.samples.empty()) {
      auto const missing = static_cast<int>((p.t - out.samples.back().t) / step) - 1;
      if (missing > opts.max_fill_steps) {
        rep.gaps.push_back({out.samples.back().t, p.t, missing});
        rep.discarded += out.samples.size();
        rep.filled = 0;
        out.samples.clear();
      } else {
        auto const prev = out.samples.back();
        for (int k = 1; k <= missing; ++k) {
          out.samples.push_back({prev.t + k * step, prev.value});
          ++rep.filled;
        }
      }
    }
    out.samples.push_back(p);
  }
  return out;
}

Harvest harvest(ngsi::BrokerClient& broker, std::string const& entity_id, std::string const& attr,
                epoch_t window_seconds, epoch_t now, HarvestOptions const& opts) {
  if (window_seconds <= 0) {
    throw std::invalid_argument{"harvest window must be positive"};
  }
  if (!broker.get(entity_id)) {
    throw EstimatorError{EstimatorError::Kind::unknown_entity, "unknown entity " + entity_id};
  }
  std::vector<Sample> raw;
  for (auto const& r : broker.history(entity_id, attr, now - window_seconds, now)) {
    auto const* v = std::get_if<double>(&r.value);
    if (v == nullptr) {
      throw EstimatorError{EstimatorError::Kind::invalid_series,
                           entity_id + "/" + attr + " holds a non-numeric value at " + to_iso8601(r.observed_at)};
    }
    raw.push_back({r.observed_at, *v});
  }
  Harvest h;
  h.series = regularize(entity_id, attr, std::move(raw), opts.grid, &h.gaps);
  if (h.series.samples.size() < opts.min_points) {
    throw EstimatorError{EstimatorError::Kind::insufficient_data,
                         entity_id + "/" + attr + ": " + std::to_string(h.series.samples.size()) + " points, need " +
                             std::to_string(opts.min_points)};
  }
  h.series.validate();
  return h;
}

}  // namespace atomic::estimator
