#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "avdeploy/acquire.hpp"
#include "avdeploy/env.hpp"
#include "avdeploy/fit.hpp"
#include "avdeploy/rng.hpp"
#include "avdeploy/surrogate.hpp"
#include "avdeploy/world.hpp"

namespace avdeploy {

enum class Strategy { Accelerated, Random };

std::string to_string(Strategy strategy);

struct RunConfig {
  Strategy strategy = Strategy::Accelerated;
  /// Error tolerance on the average estimation uncertainty z(n).
  double tau = 7.5e-4;
  /// Minimum number of deployments before the tolerance may terminate the run.
  int n_min = 100;
  /// Initial random samples drawn without replacement.
  int n_init = 25;
  /// Hard safeguard on the total number of deployments.
  int max_iters = 5000;
  ObservationMode observation = ObservationMode::exact();
  /// Master seed; all stochastic components run on sub-streams derived from it.
  std::uint64_t seed = 0;
  FitConfig fit;
  AcquireConfig acquire;  // carries xi and kappa

  double xi() const noexcept { return acquire.xi; }
};

/// One deployment. Records n = 1..n_init come from initialization and carry no
/// selection metadata (feasible_count 0, gain 0); their alpha column is the
/// raw exp(-kappa z(n)) signal. From n_init on, alpha is the running-max
/// confidence sequence and the selection fields describe the acquisition that
/// chose this cell. residual_z and avg_z always refer to the fit on the
/// history up to and including this deployment, so avg_z = residual_z / n on
/// every row.
struct IterationRecord {
  int n = 0;
  Environment environment;
  double f_obs = 0.0;
  double residual_z = 0.0;
  double avg_z = 0.0;
  double alpha = 0.0;
  int feasible_count = 0;
  bool fallback = false;
  double gain = 0.0;
};

enum class Termination { ToleranceMet, MaxIters };

std::string to_string(Termination termination);

struct RunResult {
  std::vector<IterationRecord> records;
  int n_star = 0;
  Termination terminated_by = Termination::MaxIters;
  Theta final_theta;
  double mean_f_obs = 0.0;
  double std_f_obs = 0.0;
  double final_avg_z = 0.0;
  std::uint64_t world_hash = 0;
  Strategy strategy = Strategy::Accelerated;
};

/// n_init distinct cells sampled uniformly without replacement, each observed
/// through the world channel.
DeploymentHistory initialize(const RiskTable& world, int n_init, const ObservationMode& mode,
                             Rng& init_rng, Rng& obs_rng);

/// True iff the accuracy tolerance is met and enough deployments were made.
bool should_terminate(int n, double avg_z, const RunConfig& config);

/// Mutable state of a run between steps; exposed so single steps can be
/// driven and inspected directly.
struct RunState {
  EnvironmentSpace space;
  DeploymentHistory history;
  FitResult current_fit;
  Theta previous_theta;
  double alpha = 0.0;
  std::vector<IterationRecord> records;
  Rng obs_rng;
  Rng tie_rng;
  Rng select_rng;
  std::uint64_t restart_seed_base = 0;
};

/// Initialization plus the per-observation fits that give every record its
/// residual columns.
RunState make_run_state(const RunConfig& config, const RiskTable& world);

/// Per-selection audit data, emitted for every accelerated selection so the
/// feasibility constraint can be verified externally.
struct SelectionAudit {
  int fit_n = 0;  // history size the selecting fit was computed on
  Environment environment;
  double alpha = 0.0;
  double avg_z = 0.0;
  double fhat_selected = 0.0;
  int feasible_count = 0;
  bool fallback = false;
};

using SelectionObserver = std::function<void(const SelectionAudit&)>;

/// One deployment: select (strategy-dependent), observe, append, refit, log.
IterationRecord step(RunState& state, const RiskTable& world, const RunConfig& config,
                     const SelectionObserver& observer = nullptr);

/// Full run: initialize, iterate step until the termination rule fires or
/// max_iters is reached (flagged in the result, not an exception).
RunResult run(const RunConfig& config, const RiskTable& world,
              const SelectionObserver& observer = nullptr);

/// Per-iteration log, columns `n,e1,e2,f_obs,z_n,avg_z,alpha,feasible_count,fallback,gain`.
std::string run_log_to_csv(const RunResult& result);

/// Structured summary of a run including the fitted parameters.
std::string run_summary_json(const RunResult& result, const RunConfig& config);

}  // namespace avdeploy
