#include "avdeploy/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <stdexcept>

#include <fmt/format.h>

#include "avdeploy/csv.hpp"
#include "avdeploy/errors.hpp"

namespace avdeploy {
namespace {

void validate(const WorldConfig& config) {
  if (!(config.floor < config.ceiling)) {
    throw std::invalid_argument("WorldConfig: floor must be below ceiling");
  }
  if (config.floor < 0.0 || config.ceiling > 1.0) {
    throw std::invalid_argument("WorldConfig: clamps must stay within [0, 1]");
  }
  if (config.diurnal_amplitude < 0.0 || config.noise_sigma < 0.0 || config.base_risk < 0.0) {
    throw std::invalid_argument("WorldConfig: base, amplitude and sigma must be nonnegative");
  }
  if (!(config.cluster_spread_lo > 0.0) || config.cluster_spread_hi < config.cluster_spread_lo) {
    throw std::invalid_argument("WorldConfig: cluster spread range is invalid");
  }
}

}  // namespace

RiskTable::RiskTable(EnvironmentSpace space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != space_.size()) {
    throw std::invalid_argument(fmt::format("RiskTable: expected {} values, got {}",
                                            space_.size(), values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("RiskTable: risk values must lie in [0, 1]");
    }
  }
}

double RiskTable::mean() const {
  double total = 0.0;
  for (double v : values_) total += v;
  return total / static_cast<double>(values_.size());
}

double RiskTable::min() const { return *std::min_element(values_.begin(), values_.end()); }

double RiskTable::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::uint64_t RiskTable::content_hash() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto absorb = [&hash](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t m1 = static_cast<std::uint64_t>(space_.cluster_count());
  const std::uint64_t m2 = static_cast<std::uint64_t>(space_.grid().group_count());
  absorb(&m1, sizeof(m1));
  absorb(&m2, sizeof(m2));
  for (double v : values_) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    absorb(&bits, sizeof(bits));
  }
  return hash;
}

ObservationMode ObservationMode::monte_carlo(int sample_count) {
  if (sample_count < 1) {
    throw std::invalid_argument("ObservationMode: sample count must be at least 1");
  }
  return ObservationMode(sample_count);
}

double diurnal_weight(double t_hours) {
  // Shape anchors over one day: overnight trough, morning and evening peaks.
  static constexpr std::array<std::pair<double, double>, 10> anchors{{
      {0.0, 0.35},
      {3.0, 0.22},
      {5.0, 0.30},
      {8.0, 1.00},
      {11.0, 0.55},
      {14.0, 0.60},
      {17.0, 0.90},
      {20.0, 0.50},
      {22.0, 0.38},
      {24.0, 0.35},
  }};
  double t = std::fmod(t_hours, 24.0);
  if (t < 0.0) t += 24.0;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (t <= anchors[i].first) {
      const auto [t0, w0] = anchors[i - 1];
      const auto [t1, w1] = anchors[i];
      return w0 + (w1 - w0) * (t - t0) / (t1 - t0);
    }
  }
  return anchors.back().second;
}

RiskTable generate_world(const EnvironmentSpace& space, const WorldConfig& config, Rng& rng) {
  validate(config);
  const int m1 = space.cluster_count();
  const int m2 = space.grid().group_count();

  std::uniform_real_distribution<double> log_spread(std::log(config.cluster_spread_lo),
                                                    std::log(config.cluster_spread_hi));
  std::vector<double> multiplier(static_cast<std::size_t>(m1));
  for (double& c : multiplier) c = std::exp(log_spread(rng));

  std::vector<double> temporal(static_cast<std::size_t>(m2));
  for (int k = 1; k <= m2; ++k) {
    temporal[static_cast<std::size_t>(k) - 1] =
        config.base_risk + config.diurnal_amplitude * diurnal_weight(space.grid().midpoint(k));
  }

  std::normal_distribution<double> standard_normal(0.0, 1.0);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(space.size()));
  for (int e1 = 1; e1 <= m1; ++e1) {
    for (int e2 = 1; e2 <= m2; ++e2) {
      const double noise = std::exp(config.noise_sigma * standard_normal(rng));
      const double raw = multiplier[static_cast<std::size_t>(e1) - 1] *
                         temporal[static_cast<std::size_t>(e2) - 1] * noise;
      values.push_back(std::clamp(raw, config.floor, config.ceiling));
    }
  }
  return RiskTable(space, std::move(values));
}

RiskTable generate_world(const EnvironmentSpace& space, const WorldConfig& config) {
  Rng rng = make_rng(config.seed, seed_stream::world);
  return generate_world(space, config, rng);
}

double observe(const RiskTable& table, Environment e, const ObservationMode& mode, Rng& rng) {
  const double truth = table.at(e);
  if (mode.is_exact()) {
    return truth;
  }
  std::bernoulli_distribution risky(truth);
  long count = 0;
  for (int j = 0; j < mode.sample_count(); ++j) {
    if (risky(rng)) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(mode.sample_count());
}

std::string risk_table_to_csv(const RiskTable& table) {
  std::string out = "cluster,time_group,risk\n";
  const int m2 = table.space().grid().group_count();
  for (int e1 = 1; e1 <= table.space().cluster_count(); ++e1) {
    for (int e2 = 1; e2 <= m2; ++e2) {
      out += fmt::format("{},{},{}\n", e1, e2, table.at(Environment{e1, e2}));
    }
  }
  return out;
}

RiskTable risk_table_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("risk table: empty input");
  }
  csv::trim_cr(line);
  if (line != "cluster,time_group,risk") {
    throw ParseError(fmt::format("risk table: expected header 'cluster,time_group,risk', got '{}'",
                                 line));
  }
  struct Row {
    int e1;
    int e2;
    double risk;
  };
  std::vector<Row> rows;
  long line_no = 1;
  int m1 = 0;
  int m2 = 0;
  while (std::getline(in, line)) {
    ++line_no;
    csv::trim_cr(line);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError(fmt::format("line {}: expected 3 fields, got {}", line_no, fields.size()));
    }
    const long e1 = csv::parse_long(fields[0], line_no, "cluster");
    const long e2 = csv::parse_long(fields[1], line_no, "time_group");
    const double risk = csv::parse_double(fields[2], line_no, "risk");
    if (e1 < 1 || e2 < 1) {
      throw ParseError(fmt::format("line {}: cluster and time_group must be positive", line_no));
    }
    if (risk < 0.0 || risk > 1.0) {
      throw ParseError(fmt::format("line {}: risk {} outside [0, 1]", line_no, risk));
    }
    rows.push_back(Row{static_cast<int>(e1), static_cast<int>(e2), risk});
    m1 = std::max(m1, static_cast<int>(e1));
    m2 = std::max(m2, static_cast<int>(e2));
  }
  if (rows.empty()) {
    throw ParseError("risk table: no data rows");
  }
  EnvironmentSpace space(m1, TimeGrid::equal_groups(m2));
  std::vector<double> values(static_cast<std::size_t>(space.size()),
                             std::numeric_limits<double>::quiet_NaN());
  for (const Row& row : rows) {
    const auto idx = static_cast<std::size_t>(space.index_of(Environment{row.e1, row.e2}));
    if (!std::isnan(values[idx])) {
      throw ParseError(fmt::format("risk table: duplicate cell ({}, {})", row.e1, row.e2));
    }
    values[idx] = row.risk;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      const Environment e = space.at_index(static_cast<int>(i));
      throw ParseError(fmt::format("risk table: missing cell ({}, {})", e.e1, e.e2));
    }
  }
  return RiskTable(std::move(space), std::move(values));
}

void save_risk_table_csv(const RiskTable& table, const std::filesystem::path& path) {
  csv::write_file(path, risk_table_to_csv(table));
}

RiskTable load_risk_table_csv(const std::filesystem::path& path) {
  auto in = csv::open_input(path);
  try {
    return risk_table_from_csv(in);
  } catch (const ParseError& err) {
    throw ParseError(fmt::format("{}: {}", path.string(), err.what()));
  }
}

}  // namespace avdeploy
