#include "pnec/metrics.hpp"

#include <cmath>

#include "pnec/errors.hpp"

namespace pnec {

namespace {
constexpr double kRadToDeg = 180.0 / kPi;
}

double rotation_error_deg(const Mat3& rotation_true, const Mat3& rotation_est) {
  return rotation_angle(rotation_true.transpose() * rotation_est) * kRadToDeg;
}

double translation_error_deg(const Vec3& t_true, const Vec3& t_est) {
  const double c = std::clamp(t_true.dot(t_est), -1.0, 1.0);
  return std::acos(c) * kRadToDeg;
}

double rpe_rmse_deg(const Trajectory& truth, const Trajectory& estimate, int delta) {
  const std::size_t n = truth.rotations.size();
  if (estimate.rotations.size() != n) {
    fail(ErrorCode::invalid_argument, "trajectories must have equal length");
  }
  if (delta < 1 || static_cast<std::size_t>(delta) >= n) {
    fail(ErrorCode::invalid_argument, "delta must be in [1, n-1]");
  }
  const std::size_t m = n - static_cast<std::size_t>(delta);
  double sum_squared = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Mat3 rel_true = truth.rotations[i].transpose() * truth.rotations[i + delta];
    const Mat3 rel_est = estimate.rotations[i].transpose() * estimate.rotations[i + delta];
    if ((rel_true.array() == rel_est.array()).all()) continue;  // exact residual 0
    const double residual = rotation_angle(rel_true.transpose() * rel_est) * kRadToDeg;
    sum_squared += residual * residual;
  }
  return std::sqrt(sum_squared / static_cast<double>(m));
}

double rpe1_deg(const Trajectory& truth, const Trajectory& estimate) {
  return rpe_rmse_deg(truth, estimate, 1);
}

double rpen_deg(const Trajectory& truth, const Trajectory& estimate) {
  const std::size_t n = truth.rotations.size();
  if (estimate.rotations.size() != n) {
    fail(ErrorCode::invalid_argument, "trajectories must have equal length");
  }
  if (n < 2) fail(ErrorCode::invalid_argument, "trajectory too short");
  double sum = 0.0;
  for (std::size_t delta = 1; delta < n; ++delta) {
    sum += rpe_rmse_deg(truth, estimate, static_cast<int>(delta));
  }
  return sum / static_cast<double>(n - 1);
}

}  // namespace pnec
