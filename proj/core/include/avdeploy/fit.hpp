#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "avdeploy/env.hpp"
#include "avdeploy/surrogate.hpp"

namespace avdeploy {

/// Ordered record of deployments and the risk values observed for them.
/// Duplicate environments are permitted and weight the fit naturally.
struct DeploymentHistory {
  struct Entry {
    Environment environment;
    double observed = 0.0;
  };

  std::vector<Entry> entries;

  /// Appends one observation; rejects non-finite values and values outside [0, 1].
  void append(Environment environment, double observed);

  int size() const noexcept { return static_cast<int>(entries.size()); }
  bool empty() const noexcept { return entries.empty(); }
};

struct FitConfig {
  int max_als_rounds = 200;
  /// Stop when the relative change of the residual between rounds drops below this.
  double als_tolerance = 1e-10;
  /// Random restarts run in addition to the default (and optional warm) start.
  int restarts = 3;
  /// Seed of the restart-initialization stream.
  std::uint64_t seed = 0;
};

struct FitResult {
  Theta theta;
  /// Achieved L2 norm of the residual over the history.
  double residual_z = 0.0;
  /// residual_z / n.
  double avg_uncertainty = 0.0;
  int als_rounds = 0;
  bool converged = false;
  /// Residual of the winning start, one entry per round including the initial state.
  std::vector<double> residual_history;
  /// Clusters whose spatial update had zero design weight and kept their value.
  std::vector<int> degenerate_clusters;
};

/// Fits Theta to the history by alternating least squares over the spatial and
/// temporal blocks, normalized so mean(theta1) = 1. The lowest-residual start
/// wins; ties go to the earlier start (warm start first, then the default
/// initialization, then random restarts in order).
FitResult fit(const DeploymentHistory& history, const EnvironmentSpace& space,
              const FitConfig& config = {}, const std::optional<Theta>& warm_start = {});

/// Exact least-squares solution of the temporal block (theta2_0, lambdas)
/// given fixed spatial multipliers; minimum-norm when the system is
/// rank-deficient (for example when a time group is unobserved).
std::pair<double, std::vector<double>> temporal_substep(const DeploymentHistory& history,
                                                        const std::vector<double>& theta1_fixed,
                                                        const EnvironmentSpace& space);

struct SpatialUpdate {
  std::vector<double> theta1;
  std::vector<int> degenerate_clusters;
};

/// Per-cluster closed-form update of the spatial multipliers given a fixed
/// temporal block, projected onto [0, inf). Clusters without observations, and
/// observed clusters whose temporal values are all zero (flagged), keep their
/// previous value.
SpatialUpdate spatial_substep(const DeploymentHistory& history, double theta2_0,
                              const std::vector<double>& lambdas, const EnvironmentSpace& space,
                              const std::vector<double>& previous_theta1);

/// z(n) = z^(n) / n for n >= 1.
double avg_uncertainty(double residual_z, int n);

}  // namespace avdeploy
