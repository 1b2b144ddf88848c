#include "avdeploy/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace avdeploy {

TimeGrid::TimeGrid(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
  if (boundaries_.size() < 2) {
    throw std::invalid_argument("TimeGrid: need at least two boundaries");
  }
  if (boundaries_.front() != 0.0) {
    throw std::invalid_argument("TimeGrid: first boundary must be 0");
  }
  if (boundaries_.back() != 24.0) {
    throw std::invalid_argument("TimeGrid: last boundary must be 24");
  }
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (!(boundaries_[i] > boundaries_[i - 1])) {
      throw std::invalid_argument("TimeGrid: boundaries must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::equal_groups(int group_count) {
  if (group_count < 1) {
    throw std::invalid_argument("TimeGrid: group_count must be positive");
  }
  std::vector<double> bounds(static_cast<std::size_t>(group_count) + 1);
  for (int k = 0; k <= group_count; ++k) {
    bounds[static_cast<std::size_t>(k)] = 24.0 * k / group_count;
  }
  bounds.back() = 24.0;
  return TimeGrid(std::move(bounds));
}

double TimeGrid::width(int group) const {
  return boundaries_.at(static_cast<std::size_t>(group)) -
         boundaries_.at(static_cast<std::size_t>(group) - 1);
}

double TimeGrid::left_boundary(int group) const {
  if (group < 1 || group > group_count()) {
    throw std::out_of_range("TimeGrid: group index " + std::to_string(group) + " out of range");
  }
  return boundaries_[static_cast<std::size_t>(group) - 1];
}

double TimeGrid::midpoint(int group) const {
  return 0.5 * (left_boundary(group) + boundaries_[static_cast<std::size_t>(group)]);
}

int time_group_of(double t, const TimeGrid& grid) {
  if (!(t >= 0.0) || !(t < 24.0)) {
    throw std::out_of_range("time_group_of: t=" + std::to_string(t) + " outside [0, 24)");
  }
  const auto& bounds = grid.boundaries();
  // First boundary strictly greater than t; t lives in the group ending there.
  auto it = std::upper_bound(bounds.begin(), bounds.end(), t);
  return static_cast<int>(it - bounds.begin());
}

EnvironmentSpace::EnvironmentSpace(int cluster_count, TimeGrid grid)
    : cluster_count_(cluster_count), grid_(std::move(grid)) {
  if (cluster_count_ < 1) {
    throw std::invalid_argument("EnvironmentSpace: cluster_count must be positive");
  }
}

bool EnvironmentSpace::contains(Environment e) const noexcept {
  return e.e1 >= 1 && e.e1 <= cluster_count_ && e.e2 >= 1 && e.e2 <= grid_.group_count();
}

int EnvironmentSpace::index_of(Environment e) const {
  if (!contains(e)) {
    throw std::out_of_range("EnvironmentSpace: cell (" + std::to_string(e.e1) + "," +
                            std::to_string(e.e2) + ") outside " + std::to_string(cluster_count_) +
                            "x" + std::to_string(grid_.group_count()) + " space");
  }
  return (e.e1 - 1) * grid_.group_count() + (e.e2 - 1);
}

Environment EnvironmentSpace::at_index(int index) const {
  if (index < 0 || index >= size()) {
    throw std::out_of_range("EnvironmentSpace: index " + std::to_string(index) + " out of range");
  }
  const int m2 = grid_.group_count();
  return Environment{index / m2 + 1, index % m2 + 1};
}

std::vector<Environment> enumerate_environments(const EnvironmentSpace& space) {
  std::vector<Environment> cells;
  cells.reserve(static_cast<std::size_t>(space.size()));
  for (int e1 = 1; e1 <= space.cluster_count(); ++e1) {
    for (int e2 = 1; e2 <= space.grid().group_count(); ++e2) {
      cells.push_back(Environment{e1, e2});
    }
  }
  return cells;
}

}  // namespace avdeploy
