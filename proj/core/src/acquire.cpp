#include "avdeploy/acquire.hpp"

#include <cmath>
#include <stdexcept>

namespace avdeploy {
namespace {

void validate(const AcquireConfig& config) {
  if (!(config.xi > 0.0) || config.xi > 1.0) {
    throw std::invalid_argument("acquire: xi must be in (0, 1]");
  }
  if (!(config.kappa > 0.0)) {
    throw std::invalid_argument("acquire: kappa must be positive");
  }
}

double blended_score(double fhat, double alpha, double avg_uncertainty) {
  return alpha * fhat + (1.0 - alpha) * avg_uncertainty;
}

}  // namespace

double alpha_of(double avg_uncertainty, std::optional<double> prev_alpha,
                const AcquireConfig& config) {
  validate(config);
  if (avg_uncertainty < 0.0) {
    throw std::invalid_argument("alpha_of: avg_uncertainty must be nonnegative");
  }
  const double fresh = std::exp(-config.kappa * avg_uncertainty);
  return prev_alpha ? std::max(*prev_alpha, fresh) : fresh;
}

std::vector<std::optional<double>> latest_observations(const DeploymentHistory& history,
                                                       const EnvironmentSpace& space) {
  std::vector<std::optional<double>> latest(static_cast<std::size_t>(space.size()));
  for (const auto& entry : history.entries) {
    latest[static_cast<std::size_t>(space.index_of(entry.environment))] = entry.observed;
  }
  return latest;
}

double learning_gain(Environment e, const std::vector<std::optional<double>>& observed,
                     const IntensityModel& model_now, const IntensityModel& model_prev,
                     const EnvironmentSpace& space) {
  const auto& latest = observed[static_cast<std::size_t>(space.index_of(e))];
  if (latest) {
    return std::abs(*latest - predict(model_now, e));
  }
  return std::abs(predict(model_now, e) - predict(model_prev, e));
}

std::vector<Environment> feasible_set(const EnvironmentSpace& space, const IntensityModel& model,
                                      double alpha, double avg_uncertainty,
                                      const AcquireConfig& config) {
  validate(config);
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("feasible_set: alpha must be in (0, 1]");
  }
  std::vector<Environment> feasible;
  for (const Environment& e : enumerate_environments(space)) {
    if (blended_score(predict(model, e), alpha, avg_uncertainty) <= config.xi) {
      feasible.push_back(e);
    }
  }
  return feasible;
}

Selection select_next(const EnvironmentSpace& space, const DeploymentHistory& history,
                      const IntensityModel& model_now, const IntensityModel& model_prev,
                      double alpha, double avg_uncertainty, const AcquireConfig& config,
                      Rng& tie_rng) {
  validate(config);
  const auto observed = latest_observations(history, space);
  const auto cells = enumerate_environments(space);

  std::vector<double> scores(cells.size());
  std::vector<double> gains(cells.size());
  int feasible_count = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    scores[i] = blended_score(predict(model_now, cells[i]), alpha, avg_uncertainty);
    gains[i] = learning_gain(cells[i], observed, model_now, model_prev, space);
    if (scores[i] <= config.xi) ++feasible_count;
  }

  Selection selection;
  selection.alpha_used = alpha;
  selection.feasible_count = feasible_count;
  selection.fallback = feasible_count == 0;

  // Candidates share either the maximal gain over the feasible set or, when
  // nothing is feasible, the minimal blended score over the whole space.
  std::vector<std::size_t> candidates;
  if (!selection.fallback) {
    double best_gain = -1.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (scores[i] > config.xi) continue;
      if (gains[i] > best_gain) {
        best_gain = gains[i];
        candidates.clear();
      }
      if (gains[i] == best_gain) candidates.push_back(i);
    }
  } else {
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (scores[i] < best_score) {
        best_score = scores[i];
        candidates.clear();
      }
      if (scores[i] == best_score) candidates.push_back(i);
    }
  }

  std::size_t chosen = candidates.front();
  if (candidates.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    chosen = candidates[pick(tie_rng)];
  }
  selection.environment = cells[chosen];
  selection.gain = gains[chosen];
  return selection;
}

}  // namespace avdeploy
