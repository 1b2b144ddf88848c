#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avdeploy/env.hpp"
#include "avdeploy/world.hpp"

namespace avdeploy {

/// One logged encounter between the system under test and another road user.
struct EncounterRecord {
  std::string route_id;
  double timestamp_h = 0.0;   // clock time in hours, [0, 24)
  double range_ft = 0.0;      // distance to the encountered object
  double range_rate_ftps = 0.0;  // relative velocity; negative means closing
};

struct RiskyEventCriteria {
  double max_range = 10.0;      // feet, inclusive
  double rate_threshold = 0.0;  // ft/s, strict less-than
};

/// True iff range <= max_range and range_rate < rate_threshold.
bool is_risky(const EncounterRecord& record, const RiskyEventCriteria& criteria);

/// Parses a CSV stream with header `route_id,timestamp_h,range_ft,range_rate_ftps`.
/// Strict: field counts, numeric validation, timestamp in [0, 24), range >= 0.
/// Errors name the line number and field.
std::vector<EncounterRecord> parse_log(std::istream& in);

/// Per-route exposure and risky-event counts, bucketed by time group.
struct RouteAggregate {
  std::string route_id;
  std::vector<long> total;                     // per group
  std::vector<long> risky;                     // per group
  std::vector<std::optional<double>> p_hat;    // risky/total, missing when total == 0
  double overall_p_hat = 0.0;
  long total_count = 0;
};

/// Buckets records by (route, time group) and applies the risky-event
/// criteria. Routes come back sorted by id.
std::vector<RouteAggregate> aggregate(const std::vector<EncounterRecord>& records,
                                      const TimeGrid& grid, const RiskyEventCriteria& criteria);

struct RouteClustering {
  std::map<std::string, int> assignment;       // route_id -> cluster in 1..k
  int k = 0;
  /// Centroids in the standardized (overall p_hat, log10 count) feature space.
  std::vector<std::array<double, 2>> centroids;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> objective_history;
};

/// k-means over standardized 2-d features (overall p_hat, log10 total count)
/// with k-means++ seeding. Runs to convergence or max_iters; empty clusters
/// are re-seeded with the point farthest from its centroid. Deterministic
/// given the seed.
RouteClustering cluster_routes(const std::vector<RouteAggregate>& aggregates, int k,
                               std::uint64_t seed, int max_iters = 100);

struct RiskTableBuild {
  RiskTable table;
  /// Cells with no pooled exposure, filled with the global rate.
  std::vector<Environment> fallback_cells;
  double global_p_hat = 0.0;
};

/// Pools risky/total counts over the routes of each cluster per time group.
/// Pooling is a count ratio, not a mean of per-route rates. Empty cells take
/// the global pooled rate and are reported as fallbacks.
RiskTableBuild build_risk_table(const std::vector<RouteAggregate>& aggregates,
                                const RouteClustering& clustering, const TimeGrid& grid);

/// CSV export `route_id,cluster` with a header row, sorted by route id.
std::string clustering_to_csv(const RouteClustering& clustering);

}  // namespace avdeploy
