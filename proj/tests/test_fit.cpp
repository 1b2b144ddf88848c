#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "avdeploy/fit.hpp"
#include "avdeploy/surrogate.hpp"
#include "support/fit_oracle.hpp"

using namespace avdeploy;

namespace {

// Exact-model instance with positive temporal values, so no prediction clamps
// and the global optimum has zero residual.
struct ExactInstance {
  Theta truth;
  EnvironmentSpace space;
  DeploymentHistory history;
};

ExactInstance make_exact_instance(int m1, int m2, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_mult(-1.2, 1.2);
  std::uniform_real_distribution<double> base(1e-3, 5e-3);
  std::uniform_real_distribution<double> log_step(-0.3, 0.3);

  Theta truth;
  truth.theta1.resize(static_cast<std::size_t>(m1));
  double mean = 0.0;
  for (double& a : truth.theta1) {
    a = std::exp(log_mult(rng));
    mean += a;
  }
  mean /= static_cast<double>(m1);
  for (double& a : truth.theta1) a /= mean;

  const TimeGrid grid = TimeGrid::equal_groups(m2);
  std::vector<double> v(static_cast<std::size_t>(m2));
  v[0] = base(rng);
  for (int k = 1; k < m2; ++k) {
    v[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k) - 1] * std::exp(log_step(rng));
  }
  truth.theta2_0 = v[0];
  truth.lambdas.resize(static_cast<std::size_t>(m2) - 1);
  for (int k = 1; k < m2; ++k) {
    truth.lambdas[static_cast<std::size_t>(k) - 1] =
        (v[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(k) - 1]) / grid.width(k);
  }

  ExactInstance instance{truth, EnvironmentSpace(m1, grid), {}};
  const IntensityModel model(truth, grid);
  for (const Environment& e : enumerate_environments(instance.space)) {
    instance.history.append(e, predict_raw(model, e));
  }
  return instance;
}

fit_oracle::Instance to_oracle(const ExactInstance& instance) {
  fit_oracle::Instance oracle;
  oracle.m1 = instance.space.cluster_count();
  oracle.m2 = instance.space.grid().group_count();
  for (int k = 1; k <= oracle.m2; ++k) oracle.widths.push_back(instance.space.grid().width(k));
  for (const auto& entry : instance.history.entries) {
    oracle.obs_e1.push_back(entry.environment.e1);
    oracle.obs_e2.push_back(entry.environment.e2);
    oracle.obs_y.push_back(entry.observed);
  }
  return oracle;
}

}  // namespace

TEST_CASE("constant observations recover the flat model exactly") {
  const EnvironmentSpace space(3, TimeGrid::equal_groups(4));
  DeploymentHistory history;
  for (const Environment& e : enumerate_environments(space)) history.append(e, 0.004);

  const FitResult result = fit(history, space);
  CHECK(result.residual_z == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.converged);
  for (double a : result.theta.theta1) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.theta.theta2_0 == doctest::Approx(0.004).epsilon(1e-12));
  for (double l : result.theta.lambdas) CHECK(l == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("single observation at the reference group interpolates") {
  const EnvironmentSpace space(1, TimeGrid::equal_groups(8));
  DeploymentHistory history;
  history.append(Environment{1, 1}, 0.005);
  const FitResult result = fit(history, space);
  CHECK(result.residual_z <= 1e-12);
  CHECK(result.theta.theta1[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.theta.theta2_0 == doctest::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("fit rejects empty and invalid histories") {
  const EnvironmentSpace space(2, TimeGrid::equal_groups(2));
  DeploymentHistory empty;
  CHECK_THROWS_AS(fit(empty, space), std::invalid_argument);

  DeploymentHistory bad;
  bad.entries.push_back({Environment{1, 1}, std::nan("")});
  CHECK_THROWS_AS(fit(bad, space), std::invalid_argument);

  CHECK_THROWS_AS(bad.append(Environment{1, 1}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(bad.append(Environment{1, 1}, -0.1), std::invalid_argument);

  DeploymentHistory out_of_space;
  out_of_space.append(Environment{3, 1}, 0.001);
  CHECK_THROWS_AS(fit(out_of_space, space), std::out_of_range);
}

TEST_CASE("exact model data is recovered on full grids") {
  std::mt19937_64 rng(7);
  const ExactInstance instance = make_exact_instance(4, 4, rng);
  const FitResult result = fit(instance.history, instance.space);
  CHECK(result.residual_z <= 1e-9);

  const IntensityModel fitted(result.theta, instance.space.grid());
  const IntensityModel truth(instance.truth, instance.space.grid());
  for (const Environment& e : enumerate_environments(instance.space)) {
    CHECK(std::abs(predict(fitted, e) - predict(truth, e)) <= 1e-6);
  }
}

TEST_CASE("ALS residual matches the brute-force oracle on small instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int m1 = trial % 2 == 0 ? 2 : 4;
    const ExactInstance instance = make_exact_instance(m1, m1, rng);
    const FitResult als = fit(instance.history, instance.space);
    const fit_oracle::Result oracle = fit_oracle::fit(to_oracle(instance));
    CHECK(std::abs(als.residual_z - oracle.residual) <= 1e-8);
  }
}

TEST_CASE("temporal substep solves the linear block exactly") {
  const TimeGrid grid = TimeGrid::equal_groups(8);

  SUBCASE("constant data maps to the base level") {
    const EnvironmentSpace space(2, grid);
    DeploymentHistory history;
    for (const Environment& e : enumerate_environments(space)) history.append(e, 0.004);
    const auto [theta2_0, lambdas] = temporal_substep(history, {1.0, 1.0}, space);
    CHECK(theta2_0 == doctest::Approx(0.004).epsilon(1e-12));
    for (double l : lambdas) CHECK(l == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("two observed groups reproduce their offset") {
    const EnvironmentSpace space(1, grid);
    DeploymentHistory history;
    history.append(Environment{1, 1}, 0.002);
    history.append(Environment{1, 2}, 0.005);
    const auto [theta2_0, lambdas] = temporal_substep(history, {1.0}, space);
    CHECK(theta2_0 == doctest::Approx(0.002).epsilon(1e-9));
    // Offset d = 0.003 accumulated over the first 3-hour group.
    CHECK(lambdas[0] * 3.0 == doctest::Approx(0.003).epsilon(1e-9));
  }

  SUBCASE("unobserved groups take the minimum-norm fill") {
    const TimeGrid three = TimeGrid::equal_groups(3);
    const EnvironmentSpace space(1, three);
    DeploymentHistory history;
    history.append(Environment{1, 1}, 0.002);
    history.append(Environment{1, 3}, 0.006);
    const auto [theta2_0, lambdas] = temporal_substep(history, {1.0}, space);
    CHECK(theta2_0 == doctest::Approx(0.002).epsilon(1e-9));
    // v3 - v1 = 0.004 over two 8-hour groups; the minimum-norm split puts
    // the same intensity on both free lambdas.
    CHECK(lambdas[0] == doctest::Approx(0.004 / 16.0).epsilon(1e-9));
    CHECK(lambdas[1] == doctest::Approx(0.004 / 16.0).epsilon(1e-9));
  }
}

TEST_CASE("spatial substep applies the closed form") {
  const TimeGrid grid = TimeGrid::equal_groups(2);
  const EnvironmentSpace space(3, grid);

  SUBCASE("single observation scales directly") {
    DeploymentHistory history;
    history.append(Environment{1, 1}, 0.008);
    // temporal value v = 0.004 at group 1.
    const SpatialUpdate update = spatial_substep(history, 0.004, {0.0}, space, {1.0, 1.0, 1.0});
    CHECK(update.theta1[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(update.theta1[1] == 1.0);  // unobserved cluster keeps its value
    CHECK(update.theta1[2] == 1.0);
    CHECK(update.degenerate_clusters.empty());
  }

  SUBCASE("negative closed form projects to zero") {
    DeploymentHistory history;
    history.append(Environment{1, 2}, 0.004);
    // v at group 2 is 0.004 - 0.012 = -0.008 < 0, so the unconstrained
    // optimum is negative and the update clamps at zero.
    const SpatialUpdate update =
        spatial_substep(history, 0.004, {-0.001}, space, {1.0, 1.0, 1.0});
    CHECK(update.theta1[0] == 0.0);
  }

  SUBCASE("all-zero temporal values flag the cluster") {
    DeploymentHistory history;
    history.append(Environment{2, 1}, 0.004);
    const SpatialUpdate update = spatial_substep(history, 0.0, {0.0}, space, {1.0, 0.7, 1.0});
    CHECK(update.theta1[1] == 0.7);
    REQUIRE(update.degenerate_clusters.size() == 1);
    CHECK(update.degenerate_clusters[0] == 2);
  }
}

TEST_CASE("avg_uncertainty divides the residual") {
  CHECK(avg_uncertainty(0.1, 100) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(avg_uncertainty(0.0, 17) == 0.0);
  CHECK(avg_uncertainty(5.94e-2, 100) == doctest::Approx(5.94e-4).epsilon(1e-12));
  CHECK_THROWS_AS(avg_uncertainty(0.1, 0), std::invalid_argument);
}

TEST_CASE("ALS residual is monotone and normalization holds") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> noise(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    ExactInstance instance = make_exact_instance(4, 4, rng);
    // Perturb the observations so the fit faces genuine residuals.
    for (auto& entry : instance.history.entries) {
      entry.observed = std::max(0.0, entry.observed * (1.0 + noise(rng)));
    }
    const FitResult result = fit(instance.history, instance.space);

    for (std::size_t i = 1; i < result.residual_history.size(); ++i) {
      CHECK(result.residual_history[i] <=
            result.residual_history[i - 1] + 1e-12 * std::max(1.0, result.residual_history[i - 1]));
    }

    double mean = 0.0;
    for (double a : result.theta.theta1) mean += a;
    mean /= static_cast<double>(result.theta.theta1.size());
    CHECK(std::abs(mean - 1.0) <= 1e-12);

    CHECK(result.avg_uncertainty * instance.history.size() ==
          doctest::Approx(result.residual_z).epsilon(1e-12));
  }
}

TEST_CASE("fit quality is invariant to the bilinear scale of the truth") {
  std::mt19937_64 rng(5);
  ExactInstance instance = make_exact_instance(4, 4, rng);

  Theta scaled = instance.truth;
  const double s = 2.5;
  for (double& a : scaled.theta1) a *= s;
  scaled.theta2_0 /= s;
  for (double& l : scaled.lambdas) l /= s;

  DeploymentHistory scaled_history;
  const IntensityModel scaled_model(scaled, instance.space.grid());
  for (const Environment& e : enumerate_environments(instance.space)) {
    scaled_history.append(e, predict_raw(scaled_model, e));
  }

  const FitResult original = fit(instance.history, instance.space);
  const FitResult rescaled = fit(scaled_history, instance.space);
  CHECK(std::abs(original.residual_z - rescaled.residual_z) <= 1e-9);
}

TEST_CASE("duplicate entries double their weight in the residual") {
  const EnvironmentSpace space(1, TimeGrid::equal_groups(2));
  DeploymentHistory history;
  history.append(Environment{1, 1}, 0.0);
  history.append(Environment{1, 1}, 0.01);
  // One cluster, one group observed: the model can only place a single value
  // v at the cell, and the best v for targets {0, 0.01} is their mean.
  FitConfig config;
  const FitResult result = fit(history, space, config);
  const double expected = std::sqrt(2.0) * 0.005;
  CHECK(result.residual_z == doctest::Approx(expected).epsilon(1e-9));

  // Warm starts do not change the optimum, only the path.
  const FitResult warm = fit(history, space, config, result.theta);
  CHECK(warm.residual_z == doctest::Approx(expected).epsilon(1e-9));
}
