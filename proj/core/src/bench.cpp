#include "avdeploy/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "avdeploy/csv.hpp"
#include "avdeploy/errors.hpp"
#include "avdeploy/rng.hpp"

namespace avdeploy {
namespace {

PairResult run_pair(const BenchConfig& config, int replication) {
  WorldConfig world_config = config.world;
  world_config.seed = derive_seed(derive_seed(config.base_seed, seed_stream::world),
                                  static_cast<std::uint64_t>(replication));
  const RiskTable world = generate_world(config.space, world_config);

  RunConfig accelerated = config.run_template;
  accelerated.strategy = Strategy::Accelerated;
  accelerated.seed = derive_seed(derive_seed(config.base_seed, seed_stream::bench_accelerated),
                                 static_cast<std::uint64_t>(replication));

  RunConfig random = config.run_template;
  random.strategy = Strategy::Random;
  random.seed = derive_seed(derive_seed(config.base_seed, seed_stream::bench_random),
                            static_cast<std::uint64_t>(replication));

  PairResult pair;
  pair.replication = replication;
  pair.world_hash = world.content_hash();
  pair.accelerated = run(accelerated, world);
  pair.random = run(random, world);
  return pair;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct RunView {
  int n_star = 0;
  double mean_f_obs = 0.0;
  double terminal_avg_z = 0.0;
};

BenchSummary summarize_views(const std::vector<RunView>& accel, const std::vector<RunView>& random,
                             const std::vector<double>& accel_f_obs,
                             const std::vector<double>& random_f_obs) {
  const std::size_t pairs = accel.size();

  auto arm_summary = [](const std::vector<RunView>& runs, const std::vector<double>& pooled) {
    ArmSummary summary;
    std::vector<double> n_stars;
    n_stars.reserve(runs.size());
    for (const RunView& r : runs) {
      summary.mean_f_obs += r.mean_f_obs;
      summary.mean_terminal_avg_z += r.terminal_avg_z;
      summary.mean_n_star += r.n_star;
      n_stars.push_back(static_cast<double>(r.n_star));
    }
    const auto count = static_cast<double>(runs.size());
    summary.mean_f_obs /= count;
    summary.mean_terminal_avg_z /= count;
    summary.mean_n_star /= count;
    summary.median_n_star = median(std::move(n_stars));

    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    double ss = 0.0;
    for (double v : pooled) ss += (v - mean) * (v - mean);
    summary.std_f_obs =
        pooled.size() > 1 ? std::sqrt(ss / static_cast<double>(pooled.size() - 1)) : 0.0;
    return summary;
  };

  BenchSummary summary;
  summary.replications = static_cast<int>(pairs);
  summary.accelerated = arm_summary(accel, accel_f_obs);
  summary.random = arm_summary(random, random_f_obs);
  summary.acceleration_ratio = summary.random.mean_n_star / summary.accelerated.mean_n_star;

  std::vector<double> pair_ratios(pairs);
  int lower = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    pair_ratios[i] = static_cast<double>(random[i].n_star) / static_cast<double>(accel[i].n_star);
    if (accel[i].mean_f_obs < random[i].mean_f_obs) ++lower;
  }
  summary.median_pair_ratio = median(std::move(pair_ratios));
  summary.frac_accel_lower_mean_f = static_cast<double>(lower) / static_cast<double>(pairs);
  return summary;
}

}  // namespace

std::vector<PairResult> replicate(const BenchConfig& config) {
  if (config.replications < 1) {
    throw std::invalid_argument("BenchConfig: replications must be at least 1");
  }
  const int hardware = static_cast<int>(std::thread::hardware_concurrency());
  const int jobs = std::max(1, std::min(config.jobs > 0 ? config.jobs : std::max(hardware, 1),
                                        config.replications));

  std::vector<std::optional<PairResult>> slots(static_cast<std::size_t>(config.replications));
  if (jobs == 1) {
    for (int r = 0; r < config.replications; ++r) {
      slots[static_cast<std::size_t>(r)] = run_pair(config, r);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          while (true) {
            const int r = next.fetch_add(1);
            if (r >= config.replications) break;
            slots[static_cast<std::size_t>(r)] = run_pair(config, r);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  }

  std::vector<PairResult> pairs;
  pairs.reserve(slots.size());
  for (auto& slot : slots) pairs.push_back(std::move(*slot));
  return pairs;
}

BenchSummary summarize(const std::vector<PairResult>& pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("summarize: no replication pairs");
  }
  std::vector<RunView> accel;
  std::vector<RunView> random;
  std::vector<double> accel_f;
  std::vector<double> random_f;
  accel.reserve(pairs.size());
  random.reserve(pairs.size());
  for (const PairResult& pair : pairs) {
    accel.push_back(
        RunView{pair.accelerated.n_star, pair.accelerated.mean_f_obs, pair.accelerated.final_avg_z});
    random.push_back(
        RunView{pair.random.n_star, pair.random.mean_f_obs, pair.random.final_avg_z});
    for (const auto& r : pair.accelerated.records) accel_f.push_back(r.f_obs);
    for (const auto& r : pair.random.records) random_f.push_back(r.f_obs);
  }
  return summarize_views(accel, random, accel_f, random_f);
}

std::string curves_to_csv(const std::vector<PairResult>& pairs) {
  std::string out = "replication,arm,n,avg_z,f_obs\n";
  for (const PairResult& pair : pairs) {
    for (const auto& r : pair.accelerated.records) {
      out += fmt::format("{},accelerated,{},{},{}\n", pair.replication, r.n, r.avg_z, r.f_obs);
    }
    for (const auto& r : pair.random.records) {
      out += fmt::format("{},random,{},{},{}\n", pair.replication, r.n, r.avg_z, r.f_obs);
    }
  }
  return out;
}

std::vector<CurveRow> load_curves(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("curves: empty input");
  }
  csv::trim_cr(line);
  if (line != "replication,arm,n,avg_z,f_obs") {
    throw ParseError(
        fmt::format("curves: expected header 'replication,arm,n,avg_z,f_obs', got '{}'", line));
  }
  std::vector<CurveRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    csv::trim_cr(line);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = csv::split(line);
    if (fields.size() != 5) {
      throw ParseError(fmt::format("line {}: expected 5 fields, got {}", line_no, fields.size()));
    }
    CurveRow row;
    row.replication = static_cast<int>(csv::parse_long(fields[0], line_no, "replication"));
    row.arm = fields[1];
    if (row.arm != "accelerated" && row.arm != "random") {
      throw ParseError(fmt::format("line {}: field 'arm': unknown arm '{}'", line_no, row.arm));
    }
    row.n = static_cast<int>(csv::parse_long(fields[2], line_no, "n"));
    row.avg_z = csv::parse_double(fields[3], line_no, "avg_z");
    row.f_obs = csv::parse_double(fields[4], line_no, "f_obs");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ParseError("curves: no data rows");
  }
  return rows;
}

BenchSummary summarize_curves(const std::vector<CurveRow>& rows) {
  struct Accumulator {
    int n_star = 0;
    double sum_f = 0.0;
    long count = 0;
    double terminal_avg_z = 0.0;
  };
  std::map<int, std::map<std::string, Accumulator>> by_run;
  std::vector<double> accel_f;
  std::vector<double> random_f;
  for (const CurveRow& row : rows) {
    Accumulator& acc = by_run[row.replication][row.arm];
    acc.sum_f += row.f_obs;
    acc.count += 1;
    if (row.n > acc.n_star) {
      acc.n_star = row.n;
      acc.terminal_avg_z = row.avg_z;
    }
    (row.arm == "accelerated" ? accel_f : random_f).push_back(row.f_obs);
  }

  std::vector<RunView> accel;
  std::vector<RunView> random;
  for (const auto& [replication, arms] : by_run) {
    const auto a = arms.find("accelerated");
    const auto r = arms.find("random");
    if (a == arms.end() || r == arms.end()) {
      throw ParseError(
          fmt::format("curves: replication {} does not carry both arms", replication));
    }
    accel.push_back(RunView{a->second.n_star,
                            a->second.sum_f / static_cast<double>(a->second.count),
                            a->second.terminal_avg_z});
    random.push_back(RunView{r->second.n_star,
                             r->second.sum_f / static_cast<double>(r->second.count),
                             r->second.terminal_avg_z});
  }
  return summarize_views(accel, random, accel_f, random_f);
}

std::string bench_summary_json(const BenchSummary& summary) {
  auto arm = [](const ArmSummary& a) {
    nlohmann::json j;
    j["mean_f_obs"] = a.mean_f_obs;
    j["std_f_obs"] = a.std_f_obs;
    j["mean_terminal_avg_z"] = a.mean_terminal_avg_z;
    j["mean_n_star"] = a.mean_n_star;
    j["median_n_star"] = a.median_n_star;
    return j;
  };
  nlohmann::json j;
  j["replications"] = summary.replications;
  j["accelerated"] = arm(summary.accelerated);
  j["random"] = arm(summary.random);
  j["acceleration_ratio"] = summary.acceleration_ratio;
  j["median_pair_ratio"] = summary.median_pair_ratio;
  j["frac_accelerated_lower_mean_f"] = summary.frac_accel_lower_mean_f;
  return j.dump(2) + "\n";
}

std::string format_summary_table(const BenchSummary& summary) {
  std::string out = fmt::format("{:<14}{:>12}{:>12}{:>12}{:>10}{:>12}\n", "strategy", "avg_f",
                                "std_f", "avg_z", "n*", "acc_ratio");
  const auto row = [](const std::string& name, const ArmSummary& a, double ratio) {
    return fmt::format("{:<14}{:>12.4e}{:>12.4e}{:>12.4e}{:>10.1f}{:>12.2f}\n", name, a.mean_f_obs,
                       a.std_f_obs, a.mean_terminal_avg_z, a.mean_n_star, ratio);
  };
  out += row("accelerated", summary.accelerated, summary.acceleration_ratio);
  out += row("random", summary.random, 1.0);
  return out;
}

}  // namespace avdeploy
