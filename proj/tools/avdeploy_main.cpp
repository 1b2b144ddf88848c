#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "avdeploy/bench.hpp"
#include "avdeploy/csv.hpp"
#include "avdeploy/deploy.hpp"
#include "avdeploy/errors.hpp"
#include "avdeploy/ingest.hpp"
#include "avdeploy/world.hpp"

namespace {

using namespace avdeploy;

// Exit codes: 0 success, 1 runtime/I-O, 2 usage, 3 run did not converge.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;

struct WorldFlags {
  int cluster_count = 16;
  int time_groups = 8;
  WorldConfig config;

  EnvironmentSpace space() const {
    return EnvironmentSpace(cluster_count, TimeGrid::equal_groups(time_groups));
  }
};

void add_world_flags(CLI::App* cmd, WorldFlags& world) {
  cmd->add_option("--cluster-count", world.cluster_count, "Route clusters m1")
      ->capture_default_str();
  cmd->add_option("--time-groups", world.time_groups, "Time-of-day groups m2")
      ->capture_default_str();
  cmd->add_option("--base-risk", world.config.base_risk, "Base risk level")
      ->capture_default_str();
  cmd->add_option("--diurnal-amplitude", world.config.diurnal_amplitude,
                  "Amplitude of the day-shaped risk pattern")
      ->capture_default_str();
  cmd->add_option("--spread-lo", world.config.cluster_spread_lo,
                  "Lower bound of the log-uniform cluster multiplier")
      ->capture_default_str();
  cmd->add_option("--spread-hi", world.config.cluster_spread_hi,
                  "Upper bound of the log-uniform cluster multiplier")
      ->capture_default_str();
  cmd->add_option("--noise-sigma", world.config.noise_sigma,
                  "Sigma of the lognormal per-cell noise")
      ->capture_default_str();
  cmd->add_option("--risk-floor", world.config.floor, "Lower clamp on generated risk")
      ->capture_default_str();
  cmd->add_option("--risk-ceiling", world.config.ceiling, "Upper clamp on generated risk")
      ->capture_default_str();
}

struct RunFlags {
  RunConfig config;
  std::string strategy = "accelerated";
  int mc_samples = 0;
  double kappa = 0.0;  // 0 derives 1/tau

  RunConfig resolve() const {
    RunConfig resolved = config;
    resolved.strategy = strategy == "random" ? Strategy::Random : Strategy::Accelerated;
    resolved.observation =
        mc_samples > 0 ? ObservationMode::monte_carlo(mc_samples) : ObservationMode::exact();
    if (kappa > 0.0) {
      resolved.acquire.kappa = kappa;
    } else if (resolved.tau > 0.0) {
      resolved.acquire.kappa = 1.0 / resolved.tau;
    }
    return resolved;
  }
};

void add_run_flags(CLI::App* cmd, RunFlags& run, bool with_strategy) {
  if (with_strategy) {
    cmd->add_option("--strategy", run.strategy, "Deployment strategy")
        ->check(CLI::IsMember({"accelerated", "random"}))
        ->capture_default_str();
  }
  cmd->add_option("--xi", run.config.acquire.xi, "Risk tolerance of the feasibility constraint")
      ->capture_default_str();
  cmd->add_option("--tau", run.config.tau, "Tolerance on the average estimation error")
      ->capture_default_str();
  cmd->add_option("--kappa", run.kappa, "Alpha-schedule steepness; 0 derives 1/tau")
      ->capture_default_str();
  cmd->add_option("--n-min", run.config.n_min, "Minimum deployments before termination")
      ->capture_default_str();
  cmd->add_option("--n-init", run.config.n_init, "Initial random samples")
      ->capture_default_str();
  cmd->add_option("--max-iters", run.config.max_iters, "Hard cap on deployments")
      ->capture_default_str();
  cmd->add_option("--mc-samples", run.mc_samples,
                  "Monte Carlo samples per observation; 0 means exact")
      ->capture_default_str();
  cmd->add_option("--restarts", run.config.fit.restarts, "Random fit restarts per refit")
      ->capture_default_str();
  cmd->add_option("--als-rounds", run.config.fit.max_als_rounds, "Max alternating rounds per fit")
      ->capture_default_str();
  cmd->add_option("--als-tolerance", run.config.fit.als_tolerance,
                  "Relative residual-change stop for the fit")
      ->capture_default_str();
}

int cmd_gen_world(const WorldFlags& world, std::uint64_t seed, const std::string& out) {
  WorldConfig config = world.config;
  config.seed = seed;
  const RiskTable table = generate_world(world.space(), config);
  save_risk_table_csv(table, out);
  std::cout << fmt::format("wrote {} cells to {} (mean={:.6g} min={:.6g} max={:.6g})\n",
                           table.space().size(), out, table.mean(), table.min(), table.max());
  return kExitOk;
}

int cmd_ingest(const std::string& log_path, int k, std::uint64_t seed, int time_groups,
               double max_range, double rate_threshold, const std::string& out_table,
               const std::string& out_clusters) {
  auto in = csv::open_input(log_path);
  std::vector<EncounterRecord> records;
  try {
    records = parse_log(in);
  } catch (const ParseError& err) {
    throw ParseError(fmt::format("{}: {}", log_path, err.what()));
  }
  const TimeGrid grid = TimeGrid::equal_groups(time_groups);
  const RiskyEventCriteria criteria{max_range, rate_threshold};
  const auto aggregates = aggregate(records, grid, criteria);
  const RouteClustering clustering = cluster_routes(aggregates, k, seed);
  const RiskTableBuild build = build_risk_table(aggregates, clustering, grid);

  save_risk_table_csv(build.table, out_table);
  csv::write_file(out_clusters, clustering_to_csv(clustering));

  for (const Environment& cell : build.fallback_cells) {
    std::cerr << fmt::format(
        "warning: cell ({}, {}) has no records; using global rate {:.6g}\n", cell.e1, cell.e2,
        build.global_p_hat);
  }
  std::cout << fmt::format("{} records over {} routes -> {} clusters; table {} clusters {}\n",
                           records.size(), aggregates.size(), k, out_table, out_clusters);
  return kExitOk;
}

RiskTable resolve_world(const std::string& world_path, bool generate, std::uint64_t world_seed,
                        const WorldFlags& world) {
  if (!world_path.empty() && generate) {
    throw std::invalid_argument("give either --world or --gen, not both");
  }
  if (!world_path.empty()) {
    return load_risk_table_csv(world_path);
  }
  if (generate) {
    WorldConfig config = world.config;
    config.seed = world_seed;
    return generate_world(world.space(), config);
  }
  throw std::invalid_argument("a world is required: pass --world FILE or --gen");
}

int cmd_run(const RunFlags& run_flags, const RiskTable& world, const std::string& log_out,
            const std::string& summary_out) {
  const RunConfig config = run_flags.resolve();
  const RunResult result = run(config, world);
  csv::write_file(log_out, run_log_to_csv(result));
  csv::write_file(summary_out, run_summary_json(result, config));
  std::cout << fmt::format("{}: n*={} ({}), mean f={:.6g}, final z(n)={:.6g}\n",
                           to_string(result.strategy), result.n_star,
                           to_string(result.terminated_by), result.mean_f_obs,
                           result.final_avg_z);
  return result.terminated_by == Termination::MaxIters ? kExitNoConvergence : kExitOk;
}

int cmd_bench(const RunFlags& run_flags, const WorldFlags& world, int replications,
              std::uint64_t seed, int jobs, const std::string& summary_out,
              const std::string& curves_out) {
  BenchConfig config;
  config.replications = replications;
  config.base_seed = seed;
  config.space = world.space();
  config.world = world.config;
  config.run_template = run_flags.resolve();
  config.jobs = jobs;

  const auto pairs = replicate(config);
  const BenchSummary summary = summarize(pairs);
  csv::write_file(summary_out, bench_summary_json(summary));
  csv::write_file(curves_out, curves_to_csv(pairs));

  int non_converged = 0;
  for (const PairResult& pair : pairs) {
    non_converged += pair.accelerated.terminated_by == Termination::MaxIters ? 1 : 0;
    non_converged += pair.random.terminated_by == Termination::MaxIters ? 1 : 0;
  }
  std::cout << format_summary_table(summary);
  std::cout << fmt::format("replications={} non_converged_runs={} summary={} curves={}\n",
                           replications, non_converged, summary_out, curves_out);
  return kExitOk;
}

int cmd_report(const std::string& curves_path, const std::string& summary_out) {
  auto in = csv::open_input(curves_path);
  std::vector<CurveRow> rows;
  try {
    rows = load_curves(in);
  } catch (const ParseError& err) {
    throw ParseError(fmt::format("{}: {}", curves_path, err.what()));
  }
  const BenchSummary summary = summarize_curves(rows);
  if (!summary_out.empty()) {
    csv::write_file(summary_out, bench_summary_json(summary));
  }
  std::cout << format_summary_table(summary);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-constrained adaptive deployment simulator and benchmark harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with [subcommand] sections; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  int exit_code = kExitOk;

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic risk table CSV");
  WorldFlags gen_world;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "world.csv";
  gen->add_option("--seed", gen_seed, "World seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output risk table CSV")->capture_default_str();
  add_world_flags(gen, gen_world);
  gen->callback([&] { exit_code = cmd_gen_world(gen_world, gen_seed, gen_out); });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a risk table from an encounter log");
  std::string ingest_log;
  int ingest_k = 16;
  std::uint64_t ingest_seed = 0;
  int ingest_groups = 8;
  double ingest_max_range = 10.0;
  double ingest_rate_threshold = 0.0;
  std::string ingest_out_table = "risk_table.csv";
  std::string ingest_out_clusters = "clusters.csv";
  ingest->add_option("--log", ingest_log, "Input encounter log CSV")->required();
  ingest->add_option("--k", ingest_k, "Number of route clusters")->capture_default_str();
  ingest->add_option("--seed", ingest_seed, "k-means seed")->capture_default_str();
  ingest->add_option("--time-groups", ingest_groups, "Time-of-day groups")->capture_default_str();
  ingest->add_option("--max-range", ingest_max_range, "Risky-event range bound (feet, inclusive)")
      ->capture_default_str();
  ingest->add_option("--rate-threshold", ingest_rate_threshold,
                     "Risky-event range-rate bound (ft/s, strict less-than)")
      ->capture_default_str();
  ingest->add_option("--out-table", ingest_out_table, "Output risk table CSV")
      ->capture_default_str();
  ingest->add_option("--out-clusters", ingest_out_clusters, "Output clustering CSV")
      ->capture_default_str();
  ingest->callback([&] {
    exit_code = cmd_ingest(ingest_log, ingest_k, ingest_seed, ingest_groups, ingest_max_range,
                           ingest_rate_threshold, ingest_out_table, ingest_out_clusters);
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute one deployment run");
  RunFlags run_flags;
  WorldFlags run_world;
  std::string run_world_path;
  bool run_gen = false;
  std::uint64_t run_world_seed = 0;
  std::string run_log_out = "run_log.csv";
  std::string run_summary_out = "run_summary.json";
  run_cmd->add_option("--world", run_world_path, "Risk table CSV to run against");
  run_cmd->add_flag("--gen", run_gen, "Generate the world instead of loading it");
  run_cmd->add_option("--world-seed", run_world_seed, "Seed for --gen")->capture_default_str();
  run_cmd->add_option("--seed", run_flags.config.seed, "Master run seed")->capture_default_str();
  add_run_flags(run_cmd, run_flags, true);
  add_world_flags(run_cmd, run_world);
  run_cmd->add_option("--log-out", run_log_out, "Per-iteration log CSV")->capture_default_str();
  run_cmd->add_option("--summary-out", run_summary_out, "Run summary JSON")
      ->capture_default_str();
  run_cmd->callback([&] {
    const RiskTable world = resolve_world(run_world_path, run_gen, run_world_seed, run_world);
    exit_code = cmd_run(run_flags, world, run_log_out, run_summary_out);
  });

  // bench
  auto* bench = app.add_subcommand("bench", "Paired accelerated/random replications");
  RunFlags bench_run;
  WorldFlags bench_world;
  int bench_replications = 1000;
  std::uint64_t bench_seed = 0;
  int bench_jobs = 0;
  std::string bench_summary_out = "bench_summary.json";
  std::string bench_curves_out = "curves.csv";
  bench->add_option("--replications", bench_replications, "Paired replications")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Base seed")->capture_default_str();
  bench->add_option("--jobs", bench_jobs, "Concurrent replications; 0 uses all cores")
      ->capture_default_str();
  add_run_flags(bench, bench_run, false);
  add_world_flags(bench, bench_world);
  bench->add_option("--summary-out", bench_summary_out, "Summary JSON")->capture_default_str();
  bench->add_option("--curves-out", bench_curves_out, "Long-format curves CSV")
      ->capture_default_str();
  bench->callback([&] {
    exit_code = cmd_bench(bench_run, bench_world, bench_replications, bench_seed, bench_jobs,
                          bench_summary_out, bench_curves_out);
  });

  // report
  auto* report = app.add_subcommand("report", "Re-summarize an existing curves CSV");
  std::string report_curves;
  std::string report_summary_out;
  report->add_option("--curves", report_curves, "Curves CSV produced by bench")->required();
  report->add_option("--summary-out", report_summary_out, "Optional summary JSON output");
  report->callback([&] { exit_code = cmd_report(report_curves, report_summary_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return exit_code;
}
