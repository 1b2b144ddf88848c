#include "avdeploy/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "avdeploy/csv.hpp"
#include "avdeploy/errors.hpp"
#include "avdeploy/rng.hpp"

namespace avdeploy {

bool is_risky(const EncounterRecord& record, const RiskyEventCriteria& criteria) {
  return record.range_ft <= criteria.max_range && record.range_rate_ftps < criteria.rate_threshold;
}

std::vector<EncounterRecord> parse_log(std::istream& in) {
  static const std::string kHeader = "route_id,timestamp_h,range_ft,range_rate_ftps";
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("encounter log: empty input");
  }
  csv::trim_cr(line);
  if (line != kHeader) {
    throw ParseError(fmt::format("encounter log: expected header '{}', got '{}'", kHeader, line));
  }
  std::vector<EncounterRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    csv::trim_cr(line);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = csv::split(line);
    if (fields.size() != 4) {
      throw ParseError(fmt::format("line {}: expected 4 fields, got {}", line_no, fields.size()));
    }
    EncounterRecord record;
    record.route_id = fields[0];
    if (record.route_id.empty()) {
      throw ParseError(fmt::format("line {}: field 'route_id': must not be empty", line_no));
    }
    record.timestamp_h = csv::parse_double(fields[1], line_no, "timestamp_h");
    record.range_ft = csv::parse_double(fields[2], line_no, "range_ft");
    record.range_rate_ftps = csv::parse_double(fields[3], line_no, "range_rate_ftps");
    if (record.timestamp_h < 0.0 || record.timestamp_h >= 24.0) {
      throw ParseError(fmt::format("line {}: field 'timestamp_h': {} outside [0, 24)", line_no,
                                   record.timestamp_h));
    }
    if (record.range_ft < 0.0) {
      throw ParseError(
          fmt::format("line {}: field 'range_ft': must be nonnegative", line_no));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<RouteAggregate> aggregate(const std::vector<EncounterRecord>& records,
                                      const TimeGrid& grid, const RiskyEventCriteria& criteria) {
  if (!(criteria.max_range > 0.0)) {
    throw std::invalid_argument("RiskyEventCriteria: max_range must be positive");
  }
  const auto groups = static_cast<std::size_t>(grid.group_count());
  std::map<std::string, RouteAggregate> by_route;
  for (const EncounterRecord& record : records) {
    auto [it, inserted] = by_route.try_emplace(record.route_id);
    RouteAggregate& agg = it->second;
    if (inserted) {
      agg.route_id = record.route_id;
      agg.total.assign(groups, 0);
      agg.risky.assign(groups, 0);
    }
    const auto g = static_cast<std::size_t>(time_group_of(record.timestamp_h, grid)) - 1;
    agg.total[g] += 1;
    if (is_risky(record, criteria)) agg.risky[g] += 1;
  }
  std::vector<RouteAggregate> result;
  result.reserve(by_route.size());
  for (auto& [id, agg] : by_route) {
    long risky_total = 0;
    agg.p_hat.assign(groups, std::nullopt);
    for (std::size_t g = 0; g < groups; ++g) {
      agg.total_count += agg.total[g];
      risky_total += agg.risky[g];
      if (agg.total[g] > 0) {
        agg.p_hat[g] = static_cast<double>(agg.risky[g]) / static_cast<double>(agg.total[g]);
      }
    }
    agg.overall_p_hat = static_cast<double>(risky_total) / static_cast<double>(agg.total_count);
    result.push_back(std::move(agg));
  }
  return result;
}

namespace {

using Feature = std::array<double, 2>;

double squared_distance(const Feature& a, const Feature& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

// (overall p_hat, log10 count), each standardized to zero mean and unit
// variance. log-count tempers the heavy-tailed exposure distribution.
std::vector<Feature> standardized_features(const std::vector<RouteAggregate>& aggregates) {
  std::vector<Feature> features(aggregates.size());
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    features[i] = {aggregates[i].overall_p_hat,
                   std::log10(static_cast<double>(aggregates[i].total_count))};
  }
  for (int d = 0; d < 2; ++d) {
    double mean = 0.0;
    for (const Feature& f : features) mean += f[static_cast<std::size_t>(d)];
    mean /= static_cast<double>(features.size());
    double var = 0.0;
    for (const Feature& f : features) {
      const double diff = f[static_cast<std::size_t>(d)] - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(features.size());
    const double sd = std::sqrt(var);
    for (Feature& f : features) {
      f[static_cast<std::size_t>(d)] =
          sd > 0.0 ? (f[static_cast<std::size_t>(d)] - mean) / sd : 0.0;
    }
  }
  return features;
}

std::vector<Feature> kmeans_plus_plus(const std::vector<Feature>& points, int k, Rng& rng) {
  std::vector<Feature> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> any(0, points.size() - 1);
  centroids.push_back(points[any(rng)]);
  std::vector<double> dist2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Feature& c : centroids) best = std::min(best, squared_distance(points[i], c));
      dist2[i] = best;
      total += best;
    }
    std::size_t chosen;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        target -= dist2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with a centroid; any pick is as good.
      chosen = any(rng);
    }
    centroids.push_back(points[chosen]);
  }
  return centroids;
}

int nearest_centroid(const Feature& point, const std::vector<Feature>& centroids) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

RouteClustering cluster_routes(const std::vector<RouteAggregate>& aggregates, int k,
                               std::uint64_t seed, int max_iters) {
  if (k < 1) {
    throw std::invalid_argument("cluster_routes: k must be positive");
  }
  if (static_cast<int>(aggregates.size()) < k) {
    throw std::invalid_argument(fmt::format("cluster_routes: k={} exceeds route count {}", k,
                                            aggregates.size()));
  }
  if (max_iters < 1) {
    throw std::invalid_argument("cluster_routes: max_iters must be positive");
  }
  const std::vector<Feature> points = standardized_features(aggregates);
  Rng rng(mix64(seed));
  std::vector<Feature> centroids = kmeans_plus_plus(points, k, rng);
  std::vector<int> assignment(points.size(), 0);

  RouteClustering clustering;
  clustering.k = k;
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int nearest = nearest_centroid(points[i], centroids);
      if (nearest != assignment[i]) changed = true;
      assignment[i] = nearest;
    }

    std::vector<Feature> sums(static_cast<std::size_t>(k), Feature{0.0, 0.0});
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      sums[c][0] += points[i][0];
      sums[c][1] += points[i][1];
      counts[c] += 1;
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] > 0) {
        centroids[c] = {sums[c][0] / static_cast<double>(counts[c]),
                        sums[c][1] / static_cast<double>(counts[c])};
        continue;
      }
      // Re-seed the empty cluster with the point farthest from its centroid.
      std::size_t farthest = 0;
      double farthest_dist = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d =
            squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
        if (d > farthest_dist) {
          farthest_dist = d;
          farthest = i;
        }
      }
      centroids[c] = points[farthest];
      assignment[farthest] = static_cast<int>(c);
      changed = true;
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      objective +=
          squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
    }
    clustering.objective_history.push_back(objective);
    if (!changed) break;
  }

  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    clustering.assignment[aggregates[i].route_id] = assignment[i] + 1;
  }
  clustering.centroids = std::move(centroids);
  return clustering;
}

RiskTableBuild build_risk_table(const std::vector<RouteAggregate>& aggregates,
                                const RouteClustering& clustering, const TimeGrid& grid) {
  if (aggregates.empty()) {
    throw std::invalid_argument("build_risk_table: no route aggregates");
  }
  const int m2 = grid.group_count();
  const int k = clustering.k;
  std::vector<long> total(static_cast<std::size_t>(k * m2), 0);
  std::vector<long> risky(static_cast<std::size_t>(k * m2), 0);
  long global_total = 0;
  long global_risky = 0;
  for (const RouteAggregate& agg : aggregates) {
    const auto it = clustering.assignment.find(agg.route_id);
    if (it == clustering.assignment.end()) {
      throw std::invalid_argument(
          fmt::format("build_risk_table: route '{}' has no cluster assignment", agg.route_id));
    }
    const int cluster = it->second;
    for (int g = 0; g < m2; ++g) {
      const auto idx = static_cast<std::size_t>((cluster - 1) * m2 + g);
      total[idx] += agg.total[static_cast<std::size_t>(g)];
      risky[idx] += agg.risky[static_cast<std::size_t>(g)];
      global_total += agg.total[static_cast<std::size_t>(g)];
      global_risky += agg.risky[static_cast<std::size_t>(g)];
    }
  }
  if (global_total == 0) {
    throw std::invalid_argument("build_risk_table: aggregates carry no records");
  }
  const double global_p_hat =
      static_cast<double>(global_risky) / static_cast<double>(global_total);

  EnvironmentSpace space(k, grid);
  std::vector<double> values(static_cast<std::size_t>(space.size()));
  std::vector<Environment> fallback_cells;
  for (int c = 1; c <= k; ++c) {
    for (int g = 1; g <= m2; ++g) {
      const auto idx = static_cast<std::size_t>((c - 1) * m2 + (g - 1));
      if (total[idx] > 0) {
        values[idx] = static_cast<double>(risky[idx]) / static_cast<double>(total[idx]);
      } else {
        values[idx] = global_p_hat;
        fallback_cells.push_back(Environment{c, g});
      }
    }
  }
  return RiskTableBuild{RiskTable(std::move(space), std::move(values)),
                        std::move(fallback_cells), global_p_hat};
}

std::string clustering_to_csv(const RouteClustering& clustering) {
  std::string out = "route_id,cluster\n";
  for (const auto& [route_id, cluster] : clustering.assignment) {
    out += fmt::format("{},{}\n", route_id, cluster);
  }
  return out;
}

}  // namespace avdeploy
