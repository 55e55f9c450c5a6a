#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "atomic/ngsi/client.hpp"

namespace atomic::estimator {

class EstimatorError : public std::runtime_error {
public:
  enum class Kind { unknown_entity, insufficient_data, invalid_series, bad_horizon };
  EstimatorError(Kind kind, std::string const& what) : std::runtime_error{what}, kind_{kind} {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct Sample {
  epoch_t t{0};
  double value{0.0};
  friend bool operator==(Sample const&, Sample const&) = default;
};

struct TimeSeries {
  std::string entity_id;
  std::string attr_name;
  std::vector<Sample> samples;  // strictly increasing t
  epoch_t step_seconds{3600};

  /// Throws EstimatorError(invalid_series) when empty, unordered or non-finite.
  void validate() const;
};

struct Gap {
  epoch_t from{0};  // last sample before the gap
  epoch_t to{0};    // first sample after it
  int missing_steps{0};
};

struct GapReport {
  std::vector<Gap> gaps;       // gaps longer than the fill limit
  std::size_t discarded{0};    // grid points before the last such gap
  std::size_t filled{0};       // grid points forward-filled
};

struct RegularizeOptions {
  epoch_t step_seconds{3600};
  int max_fill_steps{3};
};

/// Puts samples on a grid of multiples of step_seconds, one point per
/// bucket (the last sample in it). Runs of at most max_fill_steps empty
/// buckets repeat the previous value; a longer run ends the series there
/// and only the points after it are kept.
TimeSeries regularize(std::string entity_id, std::string attr, std::vector<Sample> raw, RegularizeOptions const& opts,
                      GapReport* report = nullptr);

struct HarvestOptions {
  RegularizeOptions grid;
  /// Fewer regularized points than this is InsufficientData.
  std::size_t min_points{48};
};

struct Harvest {
  TimeSeries series;
  GapReport gaps;
};

/// History of `attr` on `entity_id` within [now - window, now], regularized.
/// Throws EstimatorError(unknown_entity, insufficient_data, invalid_series)
/// and BrokerError(unavailable).
Harvest harvest(ngsi::BrokerClient& broker, std::string const& entity_id, std::string const& attr,
                epoch_t window_seconds, epoch_t now, HarvestOptions const& opts = {});

}  // namespace atomic::estimator
