#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "avdeploy/env.hpp"
#include "avdeploy/rng.hpp"

namespace avdeploy {

/// Ground-truth risky-event probability for every cell of a space.
class RiskTable {
 public:
  /// Values in enumeration order (e1 outer, e2 inner); all must be in [0, 1].
  RiskTable(EnvironmentSpace space, std::vector<double> values);

  const EnvironmentSpace& space() const noexcept { return space_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double at(Environment e) const { return values_[static_cast<std::size_t>(space_.index_of(e))]; }

  double mean() const;
  double min() const;
  double max() const;

  /// FNV-1a over the cell values and dimensions; used to assert that paired
  /// benchmark arms really ran against the same world.
  std::uint64_t content_hash() const;

 private:
  EnvironmentSpace space_;
  std::vector<double> values_;
};

struct WorldConfig {
  std::uint64_t seed = 0;
  double base_risk = 1.5e-3;
  double diurnal_amplitude = 2.0e-3;
  /// Per-cluster multiplier drawn log-uniformly from this range.
  double cluster_spread_lo = 0.2;
  double cluster_spread_hi = 5.0;
  /// Sigma of the lognormal per-cell noise. This is the model-mismatch dial:
  /// the noise is applied per cell, so it breaks the bilinear structure the
  /// surrogate can represent.
  double noise_sigma = 0.9;
  double floor = 1e-5;
  double ceiling = 0.05;
};

/// How a deployment reveals f(E): exactly, or through an empirical
/// N-sample Bernoulli estimator.
class ObservationMode {
 public:
  static ObservationMode exact() { return ObservationMode(0); }
  static ObservationMode monte_carlo(int sample_count);

  bool is_exact() const noexcept { return sample_count_ == 0; }
  int sample_count() const noexcept { return sample_count_; }

  friend bool operator==(const ObservationMode&, const ObservationMode&) = default;

 private:
  explicit ObservationMode(int sample_count) : sample_count_(sample_count) {}
  int sample_count_;
};

/// Fixed day-shape weight in [0, 1]: low overnight, a morning peak around
/// 08:00 and an evening peak around 17:00. Piecewise linear and 24h-periodic.
double diurnal_weight(double t_hours);

/// Synthetic risk map: f(e1,e2) = clamp(c_e1 * (base + amplitude*diurnal) * eps,
/// floor, ceiling) with c log-uniform per cluster and eps lognormal per cell.
/// Draw order is fixed (cluster multipliers first, then cell noise in
/// enumeration order) so tables are reproducible from the seed alone.
RiskTable generate_world(const EnvironmentSpace& space, const WorldConfig& config, Rng& rng);

/// Convenience overload seeding the generator stream from config.seed.
RiskTable generate_world(const EnvironmentSpace& space, const WorldConfig& config);

/// Reveals f(E) through the configured channel. Exact mode does not consume
/// randomness; Monte Carlo mode draws N Bernoulli(f) samples and returns the
/// risky fraction.
double observe(const RiskTable& table, Environment e, const ObservationMode& mode, Rng& rng);

/// CSV import/export, columns `cluster,time_group,risk` with a header row.
/// Loading assumes equal-width time groups (the file does not carry boundaries).
std::string risk_table_to_csv(const RiskTable& table);
RiskTable risk_table_from_csv(std::istream& in);
void save_risk_table_csv(const RiskTable& table, const std::filesystem::path& path);
RiskTable load_risk_table_csv(const std::filesystem::path& path);

}  // namespace avdeploy
