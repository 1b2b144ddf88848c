#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "avdeploy/errors.hpp"
#include "avdeploy/ingest.hpp"
#include "support/golden_log.hpp"

using namespace avdeploy;

TEST_CASE("risky criteria read literally from the definition") {
  const RiskyEventCriteria criteria;
  CHECK(is_risky({"r", 1.0, 9.5, -1.0}, criteria));
  CHECK(is_risky({"r", 1.0, 10.0, -0.1}, criteria));   // boundary range inclusive
  CHECK_FALSE(is_risky({"r", 1.0, 9.0, 0.0}, criteria));  // rate must be strictly negative
  CHECK_FALSE(is_risky({"r", 1.0, 10.001, -5.0}, criteria));
  CHECK_FALSE(is_risky({"r", 1.0, 50.0, -3.0}, criteria));
}

TEST_CASE("is_risky is monotone in range and range rate") {
  const RiskyEventCriteria criteria;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> range(0.0, 20.0);
  std::uniform_real_distribution<double> rate(-5.0, 5.0);
  std::uniform_real_distribution<double> shrink(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    EncounterRecord record{"r", 0.0, range(rng), rate(rng)};
    if (!is_risky(record, criteria)) continue;
    EncounterRecord closer = record;
    closer.range_ft *= shrink(rng);
    closer.range_rate_ftps -= shrink(rng);
    CHECK(is_risky(closer, criteria));
  }
}

TEST_CASE("parse_log accepts well-formed input and reports bad rows precisely") {
  SUBCASE("well-formed") {
    std::string content = "route_id,timestamp_h,range_ft,range_rate_ftps\n";
    for (int i = 0; i < 1000; ++i) {
      content += fmt::format("route_{},{},{},{}\n", i % 7, (i % 240) * 0.1, 5.0 + i % 50,
                             -2.0 + (i % 5));
    }
    std::istringstream in(content);
    CHECK(parse_log(in).size() == 1000);
  }

  SUBCASE("wrong field count names the line") {
    std::istringstream in(
        "route_id,timestamp_h,range_ft,range_rate_ftps\n"
        "a,1.0,5.0,-1.0\n"
        "b,2.0,6.0\n");
    CHECK_THROWS_WITH_AS(parse_log(in), doctest::Contains("line 3"), ParseError);
  }

  SUBCASE("timestamp out of range names the line") {
    std::istringstream in(
        "route_id,timestamp_h,range_ft,range_rate_ftps\n"
        "a,24.5,5.0,-1.0\n");
    CHECK_THROWS_WITH_AS(parse_log(in), doctest::Contains("line 2"), ParseError);
  }

  SUBCASE("non-numeric field names line and field") {
    std::istringstream in(
        "route_id,timestamp_h,range_ft,range_rate_ftps\n"
        "a,1.0,wide,-1.0\n");
    CHECK_THROWS_WITH_AS(parse_log(in), doctest::Contains("range_ft"), ParseError);
  }

  SUBCASE("negative range rejected") {
    std::istringstream in(
        "route_id,timestamp_h,range_ft,range_rate_ftps\n"
        "a,1.0,-5.0,-1.0\n");
    CHECK_THROWS_AS(parse_log(in), ParseError);
  }

  SUBCASE("bad header rejected") {
    std::istringstream in("route,ts,r,rr\na,1.0,5.0,-1.0\n");
    CHECK_THROWS_AS(parse_log(in), ParseError);
  }
}

TEST_CASE("aggregate buckets counts by route and group") {
  const TimeGrid grid = TimeGrid::equal_groups(8);
  const RiskyEventCriteria criteria;

  SUBCASE("simple ratio") {
    std::vector<EncounterRecord> records;
    for (int i = 0; i < 1000; ++i) {
      records.push_back({"solo", 1.0, i < 3 ? 5.0 : 50.0, -1.0});
    }
    const auto aggregates = aggregate(records, grid, criteria);
    REQUIRE(aggregates.size() == 1);
    CHECK(aggregates[0].total[0] == 1000);
    CHECK(aggregates[0].risky[0] == 3);
    CHECK(aggregates[0].p_hat[0].value() == doctest::Approx(0.003).epsilon(1e-12));
    CHECK(aggregates[0].overall_p_hat == doctest::Approx(0.003).epsilon(1e-12));
  }

  SUBCASE("empty groups carry a missing marker, not zero") {
    const auto aggregates = aggregate({{"solo", 1.0, 5.0, -1.0}}, grid, criteria);
    REQUIRE(aggregates.size() == 1);
    CHECK(aggregates[0].p_hat[0].has_value());
    for (int g = 1; g < 8; ++g) {
      CHECK_FALSE(aggregates[0].p_hat[static_cast<std::size_t>(g)].has_value());
    }
  }

  SUBCASE("golden fixture counts match the script") {
    std::istringstream in(golden_log::csv());
    const auto records = parse_log(in);
    REQUIRE(static_cast<long>(records.size()) == golden_log::kTotalRows);
    const auto aggregates = aggregate(records, grid, criteria);
    REQUIRE(aggregates.size() == golden_log::kPlan.size());
    for (const auto& plan : golden_log::kPlan) {
      const auto it = std::find_if(aggregates.begin(), aggregates.end(),
                                   [&](const RouteAggregate& a) { return a.route_id == plan.route_id; });
      REQUIRE(it != aggregates.end());
      long expected_total = 0;
      long expected_risky = 0;
      for (int g = 0; g < golden_log::kGroups; ++g) {
        CHECK(it->total[static_cast<std::size_t>(g)] == plan.total[static_cast<std::size_t>(g)]);
        CHECK(it->risky[static_cast<std::size_t>(g)] == plan.risky[static_cast<std::size_t>(g)]);
        expected_total += plan.total[static_cast<std::size_t>(g)];
        expected_risky += plan.risky[static_cast<std::size_t>(g)];
      }
      CHECK(it->total_count == expected_total);
      CHECK(it->overall_p_hat ==
            doctest::Approx(static_cast<double>(expected_risky) / expected_total).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_risk_table pools counts rather than averaging rates") {
  const TimeGrid grid = TimeGrid::equal_groups(8);
  std::istringstream in(golden_log::csv());
  const auto aggregates = aggregate(parse_log(in), grid, RiskyEventCriteria{});

  RouteClustering clustering;
  clustering.k = 2;
  clustering.assignment = {{"alpha", 1}, {"charlie", 1}, {"bravo", 2}};

  const RiskTableBuild build = build_risk_table(aggregates, clustering, grid);
  // Cluster 1, group 1 pools alpha (2/200) with charlie (5/25):
  // pooled = 7/225, while the mean of the two rates would be 0.105.
  const double pooled = build.table.at(Environment{1, 1});
  CHECK(pooled == doctest::Approx(7.0 / 225.0).epsilon(1e-12));
  CHECK(std::abs(pooled - 0.5 * (2.0 / 200.0 + 5.0 / 25.0)) > 0.07);
  // Bravo alone: group 4 has 0 risky of 50.
  CHECK(build.table.at(Environment{2, 4}) == 0.0);
  CHECK(build.fallback_cells.empty());
}

TEST_CASE("single route yields its own per-group rates") {
  const TimeGrid grid = TimeGrid::equal_groups(2);
  std::vector<EncounterRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back({"only", 1.0, i < 4 ? 5.0 : 50.0, -1.0});
  for (int i = 0; i < 50; ++i) records.push_back({"only", 13.0, i < 1 ? 5.0 : 50.0, -1.0});
  const auto aggregates = aggregate(records, grid, RiskyEventCriteria{});

  RouteClustering clustering;
  clustering.k = 1;
  clustering.assignment = {{"only", 1}};
  const RiskTableBuild build = build_risk_table(aggregates, clustering, grid);
  CHECK(build.table.at(Environment{1, 1}) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(build.table.at(Environment{1, 2}) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("empty cells fall back to the global pooled rate with a warning") {
  const TimeGrid grid = TimeGrid::equal_groups(2);
  std::vector<EncounterRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back({"a", 1.0, i < 1 ? 5.0 : 50.0, -1.0});
  for (int i = 0; i < 100; ++i) records.push_back({"b", 13.0, i < 3 ? 5.0 : 50.0, -1.0});
  const auto aggregates = aggregate(records, grid, RiskyEventCriteria{});

  RouteClustering clustering;
  clustering.k = 2;
  clustering.assignment = {{"a", 1}, {"b", 2}};
  const RiskTableBuild build = build_risk_table(aggregates, clustering, grid);
  CHECK(build.global_p_hat == doctest::Approx(0.02).epsilon(1e-12));
  REQUIRE(build.fallback_cells.size() == 2);
  CHECK(build.table.at(Environment{1, 2}) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(build.table.at(Environment{2, 1}) == doctest::Approx(0.02).epsilon(1e-12));

  // Pooled 1/100 and 3/100 risky over one cluster gives 4/200.
  RouteClustering merged;
  merged.k = 1;
  merged.assignment = {{"a", 1}, {"b", 1}};
  std::vector<EncounterRecord> same_group;
  for (int i = 0; i < 100; ++i) same_group.push_back({"a", 1.0, i < 1 ? 5.0 : 50.0, -1.0});
  for (int i = 0; i < 100; ++i) same_group.push_back({"b", 1.0, i < 3 ? 5.0 : 50.0, -1.0});
  const auto pooled = build_risk_table(aggregate(same_group, grid, RiskyEventCriteria{}), merged, grid);
  CHECK(pooled.table.at(Environment{1, 1}) == doctest::Approx(0.02).epsilon(1e-12));
}

namespace {

std::vector<RouteAggregate> synthetic_routes(int count, double p_hat_center, double count_center,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> p_noise(0.0, 1e-4);
  std::normal_distribution<double> c_noise(0.0, 0.01);
  std::vector<RouteAggregate> routes;
  for (int i = 0; i < count; ++i) {
    RouteAggregate agg;
    agg.route_id = fmt::format("route_{:04}", i);
    agg.total.assign(8, 0);
    agg.risky.assign(8, 0);
    agg.p_hat.assign(8, std::nullopt);
    agg.overall_p_hat = std::max(0.0, p_hat_center + p_noise(rng));
    agg.total_count = static_cast<long>(std::max(1.0, count_center * (1.0 + c_noise(rng))));
    routes.push_back(std::move(agg));
  }
  return routes;
}

}  // namespace

TEST_CASE("k-means recovers well-separated blobs exactly") {
  // Two blobs separated by far more than 10 sigma in both features.
  auto routes = synthetic_routes(40, 0.001, 100.0, 1);
  auto risky = synthetic_routes(40, 0.03, 10000.0, 2);
  for (auto& r : risky) r.route_id = "hot_" + r.route_id;
  routes.insert(routes.end(), risky.begin(), risky.end());

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RouteClustering clustering = cluster_routes(routes, 2, seed);
    std::set<int> low;
    std::set<int> high;
    for (const auto& [route_id, cluster] : clustering.assignment) {
      (route_id.rfind("hot_", 0) == 0 ? high : low).insert(cluster);
    }
    CHECK(low.size() == 1);
    CHECK(high.size() == 1);
    CHECK(*low.begin() != *high.begin());

    for (std::size_t i = 1; i < clustering.objective_history.size(); ++i) {
      CHECK(clustering.objective_history[i] <= clustering.objective_history[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("k equal to route count separates every route") {
  const auto routes = synthetic_routes(6, 0.01, 100.0, 3);
  const RouteClustering clustering = cluster_routes(routes, 6, 0);
  std::set<int> clusters;
  for (const auto& [route_id, cluster] : clustering.assignment) clusters.insert(cluster);
  CHECK(clusters.size() == 6);
}

TEST_CASE("k-means on 329 synthetic routes fills 16 clusters") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> p(0.0005, 0.05);
  std::uniform_real_distribution<double> logc(2.0, 5.0);
  std::vector<RouteAggregate> routes;
  for (int i = 0; i < 329; ++i) {
    RouteAggregate agg;
    agg.route_id = fmt::format("r{:03}", i);
    agg.total.assign(8, 0);
    agg.risky.assign(8, 0);
    agg.p_hat.assign(8, std::nullopt);
    agg.overall_p_hat = p(rng);
    agg.total_count = static_cast<long>(std::pow(10.0, logc(rng)));
    routes.push_back(std::move(agg));
  }
  const RouteClustering clustering = cluster_routes(routes, 16, 7);
  std::set<int> used;
  for (const auto& [route_id, cluster] : clustering.assignment) {
    CHECK(cluster >= 1);
    CHECK(cluster <= 16);
    used.insert(cluster);
  }
  CHECK(used.size() == 16);

  // Same seed, same partition.
  const RouteClustering again = cluster_routes(routes, 16, 7);
  CHECK(again.assignment == clustering.assignment);
}

TEST_CASE("cluster_routes rejects undersized inputs") {
  const auto routes = synthetic_routes(10, 0.01, 100.0, 9);
  CHECK_THROWS_AS(cluster_routes(routes, 16, 0), std::invalid_argument);
  CHECK_THROWS_AS(cluster_routes(routes, 0, 0), std::invalid_argument);
}

TEST_CASE("clustering CSV lists every route") {
  const auto routes = synthetic_routes(5, 0.01, 100.0, 10);
  const RouteClustering clustering = cluster_routes(routes, 2, 1);
  const std::string csv = clustering_to_csv(clustering);
  CHECK(csv.rfind("route_id,cluster\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
