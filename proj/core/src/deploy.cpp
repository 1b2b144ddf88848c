#include "avdeploy/deploy.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace avdeploy {
namespace {

void validate(const RunConfig& config) {
  if (config.n_init < 1) {
    throw std::invalid_argument("RunConfig: n_init must be at least 1");
  }
  if (config.n_min < config.n_init) {
    throw std::invalid_argument("RunConfig: n_min must be at least n_init");
  }
  if (config.max_iters < config.n_init) {
    throw std::invalid_argument("RunConfig: max_iters must be at least n_init");
  }
  if (!(config.tau >= 0.0)) {
    throw std::invalid_argument("RunConfig: tau must be nonnegative");
  }
}

FitConfig fit_config_for(const RunConfig& config, const RunState& state, int n) {
  FitConfig fit_config = config.fit;
  fit_config.seed = derive_seed(state.restart_seed_base, static_cast<std::uint64_t>(n));
  return fit_config;
}

double mean_observed(const DeploymentHistory& history) {
  double total = 0.0;
  for (const auto& entry : history.entries) total += entry.observed;
  return total / static_cast<double>(history.entries.size());
}

}  // namespace

std::string to_string(Strategy strategy) {
  return strategy == Strategy::Accelerated ? "accelerated" : "random";
}

std::string to_string(Termination termination) {
  return termination == Termination::ToleranceMet ? "tolerance-met" : "max-iters";
}

DeploymentHistory initialize(const RiskTable& world, int n_init, const ObservationMode& mode,
                             Rng& init_rng, Rng& obs_rng) {
  const EnvironmentSpace& space = world.space();
  if (n_init < 1 || n_init > space.size()) {
    throw std::invalid_argument(fmt::format(
        "initialize: n_init={} must lie in [1, {}] for this space", n_init, space.size()));
  }
  // Partial Fisher-Yates over the cell indices: distinct cells, uniform order.
  std::vector<int> indices(static_cast<std::size_t>(space.size()));
  std::iota(indices.begin(), indices.end(), 0);
  DeploymentHistory history;
  for (int i = 0; i < n_init; ++i) {
    std::uniform_int_distribution<int> pick(i, space.size() - 1);
    std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(pick(init_rng))]);
    const Environment e = space.at_index(indices[static_cast<std::size_t>(i)]);
    history.append(e, observe(world, e, mode, obs_rng));
  }
  return history;
}

bool should_terminate(int n, double avg_z, const RunConfig& config) {
  if (n < 1) {
    throw std::invalid_argument("should_terminate: n must be at least 1");
  }
  return avg_z <= config.tau && n >= config.n_min;
}

RunState make_run_state(const RunConfig& config, const RiskTable& world) {
  validate(config);
  RunState state{.space = world.space(),
                 .history = {},
                 .current_fit = {},
                 .previous_theta = {},
                 .alpha = 0.0,
                 .records = {},
                 .obs_rng = make_rng(config.seed, seed_stream::observe),
                 .tie_rng = make_rng(config.seed, seed_stream::tie_break),
                 .select_rng = make_rng(config.seed, seed_stream::random_select),
                 .restart_seed_base = derive_seed(config.seed, seed_stream::restart)};

  Rng init_rng = make_rng(config.seed, seed_stream::init);
  const DeploymentHistory full_init =
      initialize(world, config.n_init, config.observation, init_rng, state.obs_rng);

  // Fit after every observation so each record carries its own residual; the
  // alpha column during initialization is the raw signal, not yet the
  // running-max sequence.
  std::optional<Theta> warm;
  for (int i = 0; i < config.n_init; ++i) {
    const auto& entry = full_init.entries[static_cast<std::size_t>(i)];
    state.history.entries.push_back(entry);
    const int n = state.history.size();
    state.current_fit = fit(state.history, state.space, fit_config_for(config, state, n), warm);
    warm = state.current_fit.theta;
    const double raw_alpha =
        alpha_of(state.current_fit.avg_uncertainty, std::nullopt, config.acquire);
    state.records.push_back(IterationRecord{.n = n,
                                            .environment = entry.environment,
                                            .f_obs = entry.observed,
                                            .residual_z = state.current_fit.residual_z,
                                            .avg_z = state.current_fit.avg_uncertainty,
                                            .alpha = raw_alpha,
                                            .feasible_count = 0,
                                            .fallback = false,
                                            .gain = 0.0});
  }

  // The confidence sequence starts at n_init; earlier fits are interpolating
  // and would pin the running max at 1 prematurely.
  state.alpha = alpha_of(state.current_fit.avg_uncertainty, std::nullopt, config.acquire);
  // Until the next refit exists, the gain's second branch compares against the
  // fit initialization parameters.
  state.previous_theta =
      Theta::flat(state.space.cluster_count(), state.space.grid().group_count(),
                  mean_observed(state.history));
  return state;
}

IterationRecord step(RunState& state, const RiskTable& world, const RunConfig& config,
                     const SelectionObserver& observer) {
  const int fit_n = state.history.size();
  Selection selection;
  if (config.strategy == Strategy::Accelerated) {
    const IntensityModel model_now(state.current_fit.theta, state.space.grid());
    const IntensityModel model_prev(state.previous_theta, state.space.grid());
    selection = select_next(state.space, state.history, model_now, model_prev, state.alpha,
                            state.current_fit.avg_uncertainty, config.acquire, state.tie_rng);
    if (observer) {
      observer(SelectionAudit{.fit_n = fit_n,
                              .environment = selection.environment,
                              .alpha = state.alpha,
                              .avg_z = state.current_fit.avg_uncertainty,
                              .fhat_selected = predict(model_now, selection.environment),
                              .feasible_count = selection.feasible_count,
                              .fallback = selection.fallback});
    }
  } else {
    std::uniform_int_distribution<int> pick(0, state.space.size() - 1);
    selection.environment = state.space.at_index(pick(state.select_rng));
    selection.alpha_used = state.alpha;
  }

  const double observed = observe(world, selection.environment, config.observation, state.obs_rng);
  state.previous_theta = state.current_fit.theta;
  state.history.append(selection.environment, observed);
  const int n = state.history.size();
  state.current_fit = fit(state.history, state.space, fit_config_for(config, state, n),
                          state.previous_theta);
  state.alpha = alpha_of(state.current_fit.avg_uncertainty, state.alpha, config.acquire);

  IterationRecord record{.n = n,
                         .environment = selection.environment,
                         .f_obs = observed,
                         .residual_z = state.current_fit.residual_z,
                         .avg_z = state.current_fit.avg_uncertainty,
                         .alpha = state.alpha,
                         .feasible_count = selection.feasible_count,
                         .fallback = selection.fallback,
                         .gain = selection.gain};
  state.records.push_back(record);
  return record;
}

RunResult run(const RunConfig& config, const RiskTable& world, const SelectionObserver& observer) {
  RunState state = make_run_state(config, world);

  Termination termination = Termination::MaxIters;
  if (should_terminate(state.history.size(), state.current_fit.avg_uncertainty, config)) {
    termination = Termination::ToleranceMet;
  } else {
    while (true) {
      if (state.history.size() >= config.max_iters) {
        termination = Termination::MaxIters;
        break;
      }
      const IterationRecord record = step(state, world, config, observer);
      if (should_terminate(record.n, record.avg_z, config)) {
        termination = Termination::ToleranceMet;
        break;
      }
    }
  }

  RunResult result;
  result.records = std::move(state.records);
  result.n_star = static_cast<int>(result.records.size());
  result.terminated_by = termination;
  result.final_theta = std::move(state.current_fit.theta);
  result.final_avg_z = result.records.back().avg_z;
  result.world_hash = world.content_hash();
  result.strategy = config.strategy;

  double mean = 0.0;
  for (const auto& r : result.records) mean += r.f_obs;
  mean /= static_cast<double>(result.records.size());
  double ss = 0.0;
  for (const auto& r : result.records) ss += (r.f_obs - mean) * (r.f_obs - mean);
  result.mean_f_obs = mean;
  result.std_f_obs =
      result.records.size() > 1 ? std::sqrt(ss / static_cast<double>(result.records.size() - 1))
                                : 0.0;
  return result;
}

std::string run_log_to_csv(const RunResult& result) {
  std::string out = "n,e1,e2,f_obs,z_n,avg_z,alpha,feasible_count,fallback,gain\n";
  for (const IterationRecord& r : result.records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.n, r.environment.e1, r.environment.e2,
                       r.f_obs, r.residual_z, r.avg_z, r.alpha, r.feasible_count,
                       r.fallback ? 1 : 0, r.gain);
  }
  return out;
}

std::string run_summary_json(const RunResult& result, const RunConfig& config) {
  nlohmann::json theta;
  theta["theta1"] = result.final_theta.theta1;
  theta["theta2_0"] = result.final_theta.theta2_0;
  theta["lambdas"] = result.final_theta.lambdas;

  nlohmann::json summary;
  summary["strategy"] = to_string(result.strategy);
  summary["n_star"] = result.n_star;
  summary["terminated_by"] = to_string(result.terminated_by);
  summary["n_init"] = config.n_init;
  summary["n_min"] = config.n_min;
  summary["tau"] = config.tau;
  summary["xi"] = config.xi();
  summary["seed"] = config.seed;
  summary["observation_mode"] =
      config.observation.is_exact() ? "exact" : "monte-carlo";
  if (!config.observation.is_exact()) {
    summary["mc_samples"] = config.observation.sample_count();
  }
  summary["mean_f_obs"] = result.mean_f_obs;
  summary["std_f_obs"] = result.std_f_obs;
  summary["final_avg_z"] = result.final_avg_z;
  summary["final_residual_z"] = result.records.back().residual_z;
  summary["world_hash"] = fmt::format("{:016x}", result.world_hash);
  summary["theta"] = theta;
  return summary.dump(2) + "\n";
}

}  // namespace avdeploy
