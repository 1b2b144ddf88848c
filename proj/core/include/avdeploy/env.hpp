#pragma once

#include <vector>

namespace avdeploy {

/// Partition of the 24-hour day into half-open groups [t_{k-1}, t_k).
/// Boundaries are clock times in hours; the first is always 0 and the last 24.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> boundaries);

  /// Grid of `group_count` equal-width groups starting at midnight.
  static TimeGrid equal_groups(int group_count);

  int group_count() const noexcept { return static_cast<int>(boundaries_.size()) - 1; }
  const std::vector<double>& boundaries() const noexcept { return boundaries_; }

  // Group indices are 1-based throughout.
  double width(int group) const;
  double left_boundary(int group) const;
  double midpoint(int group) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> boundaries_;
};

/// Index of the group containing clock time t in hours, 0 <= t < 24.
/// Boundaries belong to the group on their right.
int time_group_of(double t, const TimeGrid& grid);

/// One deployment condition cell: (route cluster, time-of-day group).
struct Environment {
  int e1 = 1;
  int e2 = 1;

  friend bool operator==(const Environment&, const Environment&) = default;
};

class EnvironmentSpace {
 public:
  EnvironmentSpace(int cluster_count, TimeGrid grid);

  int cluster_count() const noexcept { return cluster_count_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return cluster_count_ * grid_.group_count(); }

  bool contains(Environment e) const noexcept;

  /// Row-major position of a cell (e1 outer, e2 inner), 0-based.
  int index_of(Environment e) const;
  Environment at_index(int index) const;

  friend bool operator==(const EnvironmentSpace&, const EnvironmentSpace&) = default;

 private:
  int cluster_count_;
  TimeGrid grid_;
};

/// All cells of the space in deterministic row-major order (e1 outer, e2 inner).
std::vector<Environment> enumerate_environments(const EnvironmentSpace& space);

}  // namespace avdeploy
