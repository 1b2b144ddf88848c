#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avdeploy/env.hpp"
#include "avdeploy/fit.hpp"
#include "avdeploy/rng.hpp"
#include "avdeploy/surrogate.hpp"

namespace avdeploy {

struct AcquireConfig {
  /// Risk tolerance of the feasibility constraint.
  double xi = 0.02;
  /// Steepness of the confidence weight alpha = exp(-kappa * z(n)). The
  /// default corresponds to 1/tau at the default error tolerance, so alpha is
  /// about 0.37 when z(n) sits at the accuracy target and near 1 well below it.
  double kappa = 1.0 / 7.5e-4;
  /// Seed used by callers to build the tie-breaking RNG stream.
  std::uint64_t tie_seed = 0;
};

struct Selection {
  Environment environment;
  double gain = 0.0;
  double alpha_used = 1.0;
  int feasible_count = 0;
  /// Set when the feasible set was empty and the safest cell was chosen instead.
  bool fallback = false;
};

/// Confidence weight for the feasibility constraint: max(prev, exp(-kappa*z)).
/// The running max keeps the sequence nondecreasing across iterations even
/// when z(n) spikes upward; it reaches 1 exactly when z(n) = 0.
double alpha_of(double avg_uncertainty, std::optional<double> prev_alpha,
                const AcquireConfig& config);

/// Latest observed value per cell (by space index), or nullopt if unobserved.
std::vector<std::optional<double>> latest_observations(const DeploymentHistory& history,
                                                       const EnvironmentSpace& space);

/// Expected informativeness of deploying at e: |observed - current estimate|
/// for observed cells (latest observation wins), otherwise the absolute change
/// between the two most recent estimates.
double learning_gain(Environment e, const std::vector<std::optional<double>>& observed,
                     const IntensityModel& model_now, const IntensityModel& model_prev,
                     const EnvironmentSpace& space);

/// Every cell whose blended risk score alpha*fhat + (1-alpha)*z(n) is within
/// the tolerance xi, in enumeration order.
std::vector<Environment> feasible_set(const EnvironmentSpace& space, const IntensityModel& model,
                                      double alpha, double avg_uncertainty,
                                      const AcquireConfig& config);

/// Feasible cell of maximum learning gain; ties are broken uniformly at random
/// with the caller-owned RNG. When the feasible set is empty the cell with the
/// lowest blended risk score is returned with the fallback flag set, so the
/// run can proceed and let z(n) shrink.
Selection select_next(const EnvironmentSpace& space, const DeploymentHistory& history,
                      const IntensityModel& model_now, const IntensityModel& model_prev,
                      double alpha, double avg_uncertainty, const AcquireConfig& config,
                      Rng& tie_rng);

}  // namespace avdeploy
