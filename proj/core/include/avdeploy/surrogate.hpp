#pragma once

#include <vector>

#include "avdeploy/env.hpp"

namespace avdeploy {

/// Surrogate risk-model parameters. `theta1` holds one nonnegative multiplier
/// per route cluster; the temporal block is the base risk level plus the first
/// m2-1 intensities in probability per hour. The closing intensity of the last
/// group is never stored: it is recomputed from the periodicity condition
/// Lambda(24) = 0 wherever the model is evaluated.
struct Theta {
  std::vector<double> theta1;
  double theta2_0 = 0.0;
  std::vector<double> lambdas;

  /// Constant-risk parameters: unit multipliers, zero intensities.
  static Theta flat(int cluster_count, int group_count, double base_risk);

  int cluster_count() const noexcept { return static_cast<int>(theta1.size()); }
  int group_count() const noexcept { return static_cast<int>(lambdas.size()) + 1; }

  friend bool operator==(const Theta&, const Theta&) = default;
};

/// Intensity of the last time group, chosen so the cumulative intensity
/// returns to zero after a full day: Lambda(24) = 0.
double closure_lambda(const std::vector<double>& lambdas, const TimeGrid& grid);

/// A Theta bound to its time grid; evaluation entry point for the surrogate.
class IntensityModel {
 public:
  IntensityModel(Theta theta, TimeGrid grid);

  const Theta& theta() const noexcept { return theta_; }
  const TimeGrid& grid() const noexcept { return grid_; }

  /// Intensity of group k (1-based), including the recomputed closure value
  /// for the last group.
  double lambda_at(int group) const;

 private:
  Theta theta_;
  TimeGrid grid_;
};

/// Lambda(t) = integral of the piecewise-constant intensity over [0, t],
/// 0 <= t <= 24. Continuous and piecewise linear in t; Lambda(24) = 0.
double cumulative_intensity(const IntensityModel& model, double t);

/// Lambda evaluated at the left boundary of time group e2. Group 1 is the
/// pure-base-risk reference: group_offset(model, 1) == 0.
double group_offset(const IntensityModel& model, int e2);

/// Unclamped model value theta1[e1] * (theta2_0 + Lambda(e2)); used inside
/// fitting so the optimizer sees smooth residuals.
double predict_raw(const IntensityModel& model, Environment e);

/// Estimated risk probability, clamped to [0, 1].
double predict(const IntensityModel& model, Environment e);

/// Clamped predictions for every cell of the space, in enumeration order.
std::vector<double> predict_all(const IntensityModel& model, const EnvironmentSpace& space);

}  // namespace avdeploy
