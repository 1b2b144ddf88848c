#include "avdeploy/surrogate.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace avdeploy {

Theta Theta::flat(int cluster_count, int group_count, double base_risk) {
  Theta theta;
  theta.theta1.assign(static_cast<std::size_t>(cluster_count), 1.0);
  theta.theta2_0 = base_risk;
  theta.lambdas.assign(static_cast<std::size_t>(group_count) - 1, 0.0);
  return theta;
}

double closure_lambda(const std::vector<double>& lambdas, const TimeGrid& grid) {
  const int m2 = grid.group_count();
  if (static_cast<int>(lambdas.size()) != m2 - 1) {
    throw std::invalid_argument("closure_lambda: expected " + std::to_string(m2 - 1) +
                                " free intensities, got " + std::to_string(lambdas.size()));
  }
  double area = 0.0;
  for (int k = 1; k <= m2 - 1; ++k) {
    area += lambdas[static_cast<std::size_t>(k) - 1] * grid.width(k);
  }
  return -area / grid.width(m2);
}

IntensityModel::IntensityModel(Theta theta, TimeGrid grid)
    : theta_(std::move(theta)), grid_(std::move(grid)) {
  if (theta_.group_count() != grid_.group_count()) {
    throw std::invalid_argument("IntensityModel: theta has " +
                                std::to_string(theta_.group_count()) + " groups, grid has " +
                                std::to_string(grid_.group_count()));
  }
  if (theta_.theta1.empty()) {
    throw std::invalid_argument("IntensityModel: theta1 must be nonempty");
  }
  for (double v : theta_.theta1) {
    if (v < 0.0) {
      throw std::invalid_argument("IntensityModel: spatial multipliers must be nonnegative");
    }
  }
}

double IntensityModel::lambda_at(int group) const {
  const int m2 = grid_.group_count();
  if (group < 1 || group > m2) {
    throw std::out_of_range("IntensityModel: group " + std::to_string(group) + " out of range");
  }
  if (group == m2) {
    return closure_lambda(theta_.lambdas, grid_);
  }
  return theta_.lambdas[static_cast<std::size_t>(group) - 1];
}

double cumulative_intensity(const IntensityModel& model, double t) {
  if (!(t >= 0.0 && t <= 24.0)) {
    throw std::out_of_range("cumulative_intensity: t=" + std::to_string(t) +
                            " outside [0, 24]");
  }
  const TimeGrid& grid = model.grid();
  const auto& bounds = grid.boundaries();
  double area = 0.0;
  for (int k = 1; k <= grid.group_count(); ++k) {
    const double right = bounds[static_cast<std::size_t>(k)];
    if (t >= right) {
      area += model.lambda_at(k) * grid.width(k);
    } else {
      area += model.lambda_at(k) * (t - bounds[static_cast<std::size_t>(k) - 1]);
      return area;
    }
  }
  // t == 24: full-day integral, which the closure pins to zero up to round-off.
  return area;
}

double group_offset(const IntensityModel& model, int e2) {
  const int m2 = model.grid().group_count();
  if (e2 < 1 || e2 > m2) {
    throw std::out_of_range("group_offset: group " + std::to_string(e2) + " out of range");
  }
  double area = 0.0;
  for (int k = 1; k < e2; ++k) {
    area += model.lambda_at(k) * model.grid().width(k);
  }
  return area;
}

double predict_raw(const IntensityModel& model, Environment e) {
  if (e.e1 < 1 || e.e1 > model.theta().cluster_count()) {
    throw std::out_of_range("predict: cluster " + std::to_string(e.e1) + " out of range");
  }
  return model.theta().theta1[static_cast<std::size_t>(e.e1) - 1] *
         (model.theta().theta2_0 + group_offset(model, e.e2));
}

double predict(const IntensityModel& model, Environment e) {
  return std::clamp(predict_raw(model, e), 0.0, 1.0);
}

std::vector<double> predict_all(const IntensityModel& model, const EnvironmentSpace& space) {
  if (model.theta().cluster_count() != space.cluster_count() ||
      model.grid().group_count() != space.grid().group_count()) {
    throw std::invalid_argument("predict_all: model dimensions do not match space");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(space.size()));
  for (int e1 = 1; e1 <= space.cluster_count(); ++e1) {
    for (int e2 = 1; e2 <= space.grid().group_count(); ++e2) {
      values.push_back(predict(model, Environment{e1, e2}));
    }
  }
  return values;
}

}  // namespace avdeploy
