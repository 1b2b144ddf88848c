#include "avdeploy/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "avdeploy/rng.hpp"

namespace avdeploy {
namespace {

// The residual depends on the history only through per-cell visit counts and
// value sums, so every ALS round costs O(cells) rather than O(n).
struct CellStats {
  int m1 = 0;
  int m2 = 0;
  std::vector<double> count;  // row-major over the space
  std::vector<double> sum;
  std::vector<double> sumsq;
  double total_count = 0.0;
  double total_sum = 0.0;
};

CellStats aggregate(const DeploymentHistory& history, const EnvironmentSpace& space) {
  CellStats stats;
  stats.m1 = space.cluster_count();
  stats.m2 = space.grid().group_count();
  const std::size_t cells = static_cast<std::size_t>(space.size());
  stats.count.assign(cells, 0.0);
  stats.sum.assign(cells, 0.0);
  stats.sumsq.assign(cells, 0.0);
  for (const auto& entry : history.entries) {
    if (!std::isfinite(entry.observed)) {
      throw std::invalid_argument("fit: non-finite observation in history");
    }
    const auto idx = static_cast<std::size_t>(space.index_of(entry.environment));
    stats.count[idx] += 1.0;
    stats.sum[idx] += entry.observed;
    stats.sumsq[idx] += entry.observed * entry.observed;
    stats.total_count += 1.0;
    stats.total_sum += entry.observed;
  }
  return stats;
}

// v_k = theta2_0 + Lambda(left boundary of group k); the temporal value every
// prediction in group k sees.
void group_values(double theta2_0, const std::vector<double>& lambdas, const TimeGrid& grid,
                  std::vector<double>& v) {
  const int m2 = grid.group_count();
  v.resize(static_cast<std::size_t>(m2));
  double offset = 0.0;
  for (int k = 1; k <= m2; ++k) {
    v[static_cast<std::size_t>(k) - 1] = theta2_0 + offset;
    if (k < m2) {
      offset += lambdas[static_cast<std::size_t>(k) - 1] * grid.width(k);
    }
  }
}

double residual_norm(const CellStats& stats, const std::vector<double>& theta1,
                     const std::vector<double>& v) {
  double total = 0.0;
  for (int c = 0; c < stats.m1; ++c) {
    const double a = theta1[static_cast<std::size_t>(c)];
    for (int k = 0; k < stats.m2; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c * stats.m2 + k);
      if (stats.count[idx] == 0.0) continue;
      const double pred = a * v[static_cast<std::size_t>(k)];
      total += stats.sumsq[idx] - 2.0 * pred * stats.sum[idx] + stats.count[idx] * pred * pred;
    }
  }
  return std::sqrt(std::max(total, 0.0));
}

// Recovers (theta2_0, lambdas) from per-group temporal values. Exact inverse
// of group_values for any grid.
void temporal_from_group_values(const std::vector<double>& v, const TimeGrid& grid,
                                double& theta2_0, std::vector<double>& lambdas) {
  const int m2 = grid.group_count();
  theta2_0 = v[0];
  lambdas.resize(static_cast<std::size_t>(m2) - 1);
  for (int k = 1; k < m2; ++k) {
    lambdas[static_cast<std::size_t>(k) - 1] =
        (v[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(k) - 1]) / grid.width(k);
  }
}

// Fast path for the temporal block: with theta1 fixed the objective separates
// per time group, v_k* = sum_c n_ck y_ck a_c / sum_c n_ck a_c^2. Valid only
// when every group carries positive design weight; the caller falls back to
// the minimum-norm solve otherwise.
bool temporal_separable(const CellStats& stats, const std::vector<double>& theta1,
                        std::vector<double>& v) {
  v.assign(static_cast<std::size_t>(stats.m2), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(stats.m2), 0.0);
  for (int c = 0; c < stats.m1; ++c) {
    const double a = theta1[static_cast<std::size_t>(c)];
    if (a == 0.0) continue;
    for (int k = 0; k < stats.m2; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c * stats.m2 + k);
      if (stats.count[idx] == 0.0) continue;
      weight[static_cast<std::size_t>(k)] += stats.count[idx] * a * a;
      v[static_cast<std::size_t>(k)] += stats.sum[idx] * a;
    }
  }
  for (int k = 0; k < stats.m2; ++k) {
    if (weight[static_cast<std::size_t>(k)] <= 0.0) return false;
    v[static_cast<std::size_t>(k)] /= weight[static_cast<std::size_t>(k)];
  }
  return true;
}

// Minimum-norm least squares over (theta2_0, lambdas) directly. Design rows
// live on observed cells; the weighted row for cell (c, k) is
// sqrt(n_ck) * a_c * [1, dt_1, ..., dt_{k-1}, 0, ...] with target sqrt(n_ck) * ybar.
void temporal_min_norm(const CellStats& stats, const std::vector<double>& theta1,
                       const TimeGrid& grid, double& theta2_0, std::vector<double>& lambdas) {
  const int m2 = stats.m2;
  int rows = 0;
  for (std::size_t idx = 0; idx < stats.count.size(); ++idx) {
    if (stats.count[idx] > 0.0) ++rows;
  }
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(std::max(rows, 1), m2);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(std::max(rows, 1));
  int r = 0;
  for (int c = 0; c < stats.m1; ++c) {
    const double a = theta1[static_cast<std::size_t>(c)];
    for (int k = 0; k < m2; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c * m2 + k);
      if (stats.count[idx] == 0.0) continue;
      const double w = std::sqrt(stats.count[idx]);
      design(r, 0) = w * a;
      for (int j = 1; j <= k; ++j) {
        design(r, j) = w * a * grid.width(j);
      }
      target(r) = w * (stats.sum[idx] / stats.count[idx]);
      ++r;
    }
  }
  Eigen::VectorXd p =
      design.completeOrthogonalDecomposition().solve(target);
  theta2_0 = p(0);
  lambdas.resize(static_cast<std::size_t>(m2) - 1);
  for (int k = 1; k < m2; ++k) {
    lambdas[static_cast<std::size_t>(k) - 1] = p(k);
  }
}

void solve_temporal(const CellStats& stats, const std::vector<double>& theta1,
                    const TimeGrid& grid, double& theta2_0, std::vector<double>& lambdas,
                    std::vector<double>& v_scratch) {
  if (temporal_separable(stats, theta1, v_scratch)) {
    temporal_from_group_values(v_scratch, grid, theta2_0, lambdas);
  } else {
    temporal_min_norm(stats, theta1, grid, theta2_0, lambdas);
  }
}

// Closed-form nonnegative update per cluster; returns the clusters whose
// design weight was zero despite observations (value carried over).
void solve_spatial(const CellStats& stats, const std::vector<double>& v,
                   std::vector<double>& theta1, std::vector<int>& degenerate) {
  for (int c = 0; c < stats.m1; ++c) {
    double num = 0.0;
    double den = 0.0;
    bool observed = false;
    for (int k = 0; k < stats.m2; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c * stats.m2 + k);
      if (stats.count[idx] == 0.0) continue;
      observed = true;
      const double vk = v[static_cast<std::size_t>(k)];
      num += stats.sum[idx] * vk;
      den += stats.count[idx] * vk * vk;
    }
    if (!observed) continue;  // no data: keep the warm-start value
    if (den <= 0.0) {
      degenerate.push_back(c + 1);
      continue;
    }
    theta1[static_cast<std::size_t>(c)] = std::max(0.0, num / den);
  }
}

// Rescales theta so mean(theta1) = 1; predictions are unchanged.
void normalize(Theta& theta) {
  const double s =
      std::accumulate(theta.theta1.begin(), theta.theta1.end(), 0.0) /
      static_cast<double>(theta.theta1.size());
  if (!(s > 0.0) || !std::isfinite(s)) return;
  for (double& a : theta.theta1) a /= s;
  theta.theta2_0 *= s;
  for (double& l : theta.lambdas) l *= s;
}

struct AlsOutcome {
  Theta theta;
  double residual = 0.0;
  int rounds = 0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<int> degenerate_clusters;
};

AlsOutcome run_als(const CellStats& stats, const TimeGrid& grid, Theta theta,
                   const FitConfig& config) {
  AlsOutcome out;
  normalize(theta);
  std::vector<double> v;
  group_values(theta.theta2_0, theta.lambdas, grid, v);
  double res = residual_norm(stats, theta.theta1, v);
  out.residual_history.push_back(res);
  std::vector<int> degenerate;
  for (int round = 1; round <= config.max_als_rounds; ++round) {
    solve_temporal(stats, theta.theta1, grid, theta.theta2_0, theta.lambdas, v);
    group_values(theta.theta2_0, theta.lambdas, grid, v);
    degenerate.clear();
    solve_spatial(stats, v, theta.theta1, degenerate);
    normalize(theta);
    group_values(theta.theta2_0, theta.lambdas, grid, v);
    const double next = residual_norm(stats, theta.theta1, v);
    out.residual_history.push_back(next);
    out.rounds = round;
    for (int c : degenerate) {
      if (std::find(out.degenerate_clusters.begin(), out.degenerate_clusters.end(), c) ==
          out.degenerate_clusters.end()) {
        out.degenerate_clusters.push_back(c);
      }
    }
    if (std::abs(res - next) <= config.als_tolerance * std::max(res, 1e-300)) {
      res = next;
      out.converged = true;
      break;
    }
    res = next;
  }
  out.theta = std::move(theta);
  out.residual = res;
  return out;
}

void validate_config(const FitConfig& config) {
  if (config.max_als_rounds < 1 || config.restarts < 0 || !(config.als_tolerance > 0.0)) {
    throw std::invalid_argument("fit: max_als_rounds and als_tolerance must be positive");
  }
}

}  // namespace

void DeploymentHistory::append(Environment environment, double observed) {
  if (!std::isfinite(observed)) {
    throw std::invalid_argument("DeploymentHistory: observation must be finite");
  }
  if (observed < 0.0 || observed > 1.0) {
    throw std::invalid_argument("DeploymentHistory: observation outside [0, 1]");
  }
  entries.push_back(Entry{environment, observed});
}

FitResult fit(const DeploymentHistory& history, const EnvironmentSpace& space,
              const FitConfig& config, const std::optional<Theta>& warm_start) {
  validate_config(config);
  if (history.empty()) {
    throw std::invalid_argument("fit: history must be nonempty");
  }
  const CellStats stats = aggregate(history, space);
  const double mean_obs = stats.total_sum / stats.total_count;
  const int m1 = space.cluster_count();
  const int m2 = space.grid().group_count();

  std::vector<Theta> starts;
  if (warm_start) {
    if (warm_start->cluster_count() != m1 || warm_start->group_count() != m2) {
      throw std::invalid_argument("fit: warm start dimensions do not match space");
    }
    starts.push_back(*warm_start);
  }
  starts.push_back(Theta::flat(m1, m2, mean_obs));
  Rng rng(config.seed);
  std::uniform_real_distribution<double> log_multiplier(std::log(0.25), std::log(4.0));
  for (int r = 0; r < config.restarts; ++r) {
    Theta theta = Theta::flat(m1, m2, mean_obs);
    for (double& a : theta.theta1) a = std::exp(log_multiplier(rng));
    starts.push_back(std::move(theta));
  }

  std::optional<AlsOutcome> best;
  for (auto& start : starts) {
    AlsOutcome outcome = run_als(stats, space.grid(), std::move(start), config);
    if (!best || outcome.residual < best->residual) {
      best = std::move(outcome);
    }
  }

  FitResult result;
  result.theta = std::move(best->theta);
  result.residual_z = best->residual;
  result.avg_uncertainty = best->residual / stats.total_count;
  result.als_rounds = best->rounds;
  result.converged = best->converged;
  result.residual_history = std::move(best->residual_history);
  result.degenerate_clusters = std::move(best->degenerate_clusters);
  return result;
}

std::pair<double, std::vector<double>> temporal_substep(const DeploymentHistory& history,
                                                        const std::vector<double>& theta1_fixed,
                                                        const EnvironmentSpace& space) {
  if (static_cast<int>(theta1_fixed.size()) != space.cluster_count()) {
    throw std::invalid_argument("temporal_substep: theta1 size does not match space");
  }
  const CellStats stats = aggregate(history, space);
  double theta2_0 = 0.0;
  std::vector<double> lambdas;
  // The separable fast path is exact only on full-rank systems; the contract
  // here is minimum-norm, so always take the decomposition route.
  temporal_min_norm(stats, theta1_fixed, space.grid(), theta2_0, lambdas);
  return {theta2_0, std::move(lambdas)};
}

SpatialUpdate spatial_substep(const DeploymentHistory& history, double theta2_0,
                              const std::vector<double>& lambdas, const EnvironmentSpace& space,
                              const std::vector<double>& previous_theta1) {
  if (static_cast<int>(previous_theta1.size()) != space.cluster_count()) {
    throw std::invalid_argument("spatial_substep: theta1 size does not match space");
  }
  if (static_cast<int>(lambdas.size()) != space.grid().group_count() - 1) {
    throw std::invalid_argument("spatial_substep: lambdas size does not match grid");
  }
  const CellStats stats = aggregate(history, space);
  std::vector<double> v;
  group_values(theta2_0, lambdas, space.grid(), v);
  SpatialUpdate update;
  update.theta1 = previous_theta1;
  solve_spatial(stats, v, update.theta1, update.degenerate_clusters);
  return update;
}

double avg_uncertainty(double residual_z, int n) {
  if (n < 1) {
    throw std::invalid_argument("avg_uncertainty: n must be at least 1");
  }
  return residual_z / static_cast<double>(n);
}

}  // namespace avdeploy
