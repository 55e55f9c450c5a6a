#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"

#include "atomic/estimator/series.hpp"

namespace atomic::estimator {

enum class TargetKind { parking, traffic };

TargetKind parse_target_kind(std::string_view s);  // throws std::invalid_argument
std::string_view to_string(TargetKind k);

struct Prediction {
  std::string entity_id;
  std::string target_attr;
  epoch_t horizon_seconds{3600};
  double predicted_value{0.0};
  epoch_t issued_at{0};
  std::string model_id;
  friend bool operator==(Prediction const&, Prediction const&) = default;
};

nlohmann::json to_json(Prediction const& p);

class FittedModel {
public:
  virtual ~FittedModel() = default;
  /// Value expected `horizon_seconds` after the last fitted sample.
  virtual double predict(epoch_t horizon_seconds) const = 0;
};

/// fit must be deterministic given identical input; predict must be pure.
class PredictionModel {
public:
  virtual ~PredictionModel() = default;
  virtual std::string id() const = 0;
  virtual std::unique_ptr<FittedModel> fit(TimeSeries const& series) const = 0;
};

struct SeasonalRidgeOptions {
  int season_steps{24};
  double lambda{1e-3};
};

/// Ridge regression of v(t) on [1, v(t - 1 step), v(t - 1 season),
/// hour-of-day one-hot], rolled forward one step at a time to the horizon.
/// The intercept is not penalized, so a constant series is reproduced exactly.
class SeasonalRidgeModel final : public PredictionModel {
public:
  explicit SeasonalRidgeModel(SeasonalRidgeOptions opts = {}) : opts_{opts} {}
  std::string id() const override;
  std::unique_ptr<FittedModel> fit(TimeSeries const& series) const override;

private:
  SeasonalRidgeOptions opts_;
};

/// Parking values into [0, 1], traffic values to >= 0.
double clamp_prediction(TargetKind kind, double value);

/// Throws EstimatorError(bad_horizon) unless the horizon is a positive
/// multiple of `step_seconds`.
void check_horizon(epoch_t horizon_seconds, epoch_t step_seconds);

/// Fits `model` (SeasonalRidgeModel when null) and predicts `horizon_seconds`
/// ahead, then clamps.
Prediction fit_predict(TimeSeries const& series, epoch_t horizon_seconds, TargetKind kind, epoch_t issued_at,
                       PredictionModel const* model = nullptr);

}  // namespace atomic::estimator
