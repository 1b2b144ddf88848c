#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "avdeploy/deploy.hpp"
#include "avdeploy/env.hpp"
#include "avdeploy/world.hpp"

namespace avdeploy {

struct BenchConfig {
  int replications = 1000;
  std::uint64_t base_seed = 0;
  EnvironmentSpace space{16, TimeGrid::equal_groups(8)};
  WorldConfig world;
  /// Per-arm strategy and seeds are overridden; everything else applies as-is.
  RunConfig run_template;
  /// Worker threads; 0 means hardware concurrency.
  int jobs = 0;
};

/// Both arms of one replication, run against the same generated world.
struct PairResult {
  int replication = 0;
  std::uint64_t world_hash = 0;
  RunResult accelerated;
  RunResult random;
};

/// Runs the paired experiment. Replications execute concurrently with
/// independent seed streams; output is ordered by replication index, so the
/// result is independent of scheduling.
std::vector<PairResult> replicate(const BenchConfig& config);

struct ArmSummary {
  /// Mean over replications of the per-run mean observed f.
  double mean_f_obs = 0.0;
  /// Sample std over all deployments in the arm, pooled across replications.
  double std_f_obs = 0.0;
  double mean_terminal_avg_z = 0.0;
  double mean_n_star = 0.0;
  double median_n_star = 0.0;
};

struct BenchSummary {
  ArmSummary accelerated;
  ArmSummary random;
  /// mean n*(random) / mean n*(accelerated).
  double acceleration_ratio = 0.0;
  /// Median over replications of the per-pair n* ratio.
  double median_pair_ratio = 0.0;
  /// Fraction of replications where the accelerated arm's mean observed f is
  /// strictly below the random arm's.
  double frac_accel_lower_mean_f = 0.0;
  int replications = 0;
};

BenchSummary summarize(const std::vector<PairResult>& pairs);

/// Long-format curve export, columns `replication,arm,n,avg_z,f_obs`; enough
/// to redraw iteration-vs-error and risk-exposure plots with any tool.
std::string curves_to_csv(const std::vector<PairResult>& pairs);

struct CurveRow {
  int replication = 0;
  std::string arm;
  int n = 0;
  double avg_z = 0.0;
  double f_obs = 0.0;
};

std::vector<CurveRow> load_curves(std::istream& in);

/// Recomputes the summary from exported curves alone (the `report` path).
BenchSummary summarize_curves(const std::vector<CurveRow>& rows);

std::string bench_summary_json(const BenchSummary& summary);

/// Human-readable comparison table for stdout.
std::string format_summary_table(const BenchSummary& summary);

}  // namespace avdeploy
