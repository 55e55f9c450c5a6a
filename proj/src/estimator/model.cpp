#include "atomic/estimator/model.hpp"

#include <algorithm>
#include <map>

#include <Eigen/Dense>

namespace atomic::estimator {

namespace {

constexpr int kHours = 24;

int hour_of_day(epoch_t t) {
  auto const s = ((t % 86400) + 86400) % 86400;
  return static_cast<int>(s / 3600);
}

class SeasonalRidgeFit final : public FittedModel {
public:
  SeasonalRidgeFit(Eigen::VectorXd w, std::vector<Sample> tail, epoch_t step, int season)
      : w_{std::move(w)}, tail_{std::move(tail)}, step_{step}, season_{season} {}

  double predict(epoch_t horizon_seconds) const override {
    auto values = tail_;
    auto const steps = horizon_seconds / step_;
    for (epoch_t k = 0; k < steps; ++k) {
      auto const t = values.back().t + step_;
      auto const n = values.size();
      Eigen::VectorXd x = features(values[n - 1].value, values[n - static_cast<std::size_t>(season_)].value, t);
      values.push_back({t, w_.dot(x)});
    }
    return values.back().value;
  }

  static Eigen::VectorXd features(double prev, double seasonal, epoch_t t) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3 + kHours);
    x[0] = 1.0;
    x[1] = prev;
    x[2] = seasonal;
    x[3 + hour_of_day(t)] = 1.0;
    return x;
  }

private:
  Eigen::VectorXd w_;
  std::vector<Sample> tail_;  // the last `season` samples
  epoch_t step_;
  int season_;
};

}  // namespace

TargetKind parse_target_kind(std::string_view s) {
  if (s == "parking") {
    return TargetKind::parking;
  }
  if (s == "traffic") {
    return TargetKind::traffic;
  }
  throw std::invalid_argument{"target kind must be parking or traffic, got '" + std::string{s} + "'"};
}

std::string_view to_string(TargetKind k) { return k == TargetKind::parking ? "parking" : "traffic"; }

nlohmann::json to_json(Prediction const& p) {
  return {{"entityId", p.entity_id},
          {"targetAttr", p.target_attr},
          {"horizonSeconds", p.horizon_seconds},
          {"predictedValue", p.predicted_value},
          {"issuedAt", to_iso8601(p.issued_at)},
          {"issuedAtEpoch", p.issued_at},
          {"modelId", p.model_id}};
}

std::string SeasonalRidgeModel::id() const {
  return "seasonal-ridge-ar/season=" + std::to_string(opts_.season_steps);
}

std::unique_ptr<FittedModel> SeasonalRidgeModel::fit(TimeSeries const& series) const {
  series.validate();
  auto const& s = series.samples;
  auto const season = static_cast<std::size_t>(opts_.season_steps);
  if (s.size() <= season) {
    throw EstimatorError{EstimatorError::Kind::insufficient_data,
                         "need more than one season of samples to fit, have " + std::to_string(s.size())};
  }
  auto const rows = static_cast<Eigen::Index>(s.size() - season);
  auto const cols = 3 + kHours;
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  for (auto i = season; i < s.size(); ++i) {
    auto const r = static_cast<Eigen::Index>(i - season);
    X.row(r) = SeasonalRidgeFit::features(s[i - 1].value, s[i - season].value, s[i].t).transpose();
    y[r] = s[i].value;
  }
  Eigen::MatrixXd A = X.transpose() * X;
  for (Eigen::Index c = 1; c < cols; ++c) {
    A(c, c) += opts_.lambda;
  }
  Eigen::VectorXd w = A.ldlt().solve(X.transpose() * y);
  std::vector<Sample> tail(s.end() - static_cast<std::ptrdiff_t>(season), s.end());
  return std::make_unique<SeasonalRidgeFit>(std::move(w), std::move(tail), series.step_seconds, opts_.season_steps);
}

double clamp_prediction(TargetKind kind, double value) {
  return kind == TargetKind::parking ? std::clamp(value, 0.0, 1.0) : std::max(value, 0.0);
}

void check_horizon(epoch_t horizon_seconds, epoch_t step_seconds) {
  if (horizon_seconds <= 0 || step_seconds <= 0 || horizon_seconds % step_seconds != 0) {
    throw EstimatorError{EstimatorError::Kind::bad_horizon,
                         "horizon " + std::to_string(horizon_seconds) + " s is not a positive multiple of the " +
                             std::to_string(step_seconds) + " s step"};
  }
}

Prediction fit_predict(TimeSeries const& series, epoch_t horizon_seconds, TargetKind kind, epoch_t issued_at,
                       PredictionModel const* model) {
  check_horizon(horizon_seconds, series.step_seconds);
  SeasonalRidgeModel const fallback;
  auto const& m = model != nullptr ? *model : fallback;
  auto const value = clamp_prediction(kind, m.fit(series)->predict(horizon_seconds));
  return {series.entity_id, series.attr_name, horizon_seconds, value, issued_at, m.id()};
}

}  // namespace atomic::estimator
