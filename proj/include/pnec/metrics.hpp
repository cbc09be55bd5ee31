#pragma once

#include <vector>

#include "pnec/geometry.hpp"

namespace pnec {

/// Angle of R_true^T R_est in degrees, in [0, 180].
double rotation_error_deg(const Mat3& rotation_true, const Mat3& rotation_est);

/// arccos(t_true . t_est) in degrees. The sign of t_est is assumed already
/// resolved by cheirality; an antipodal estimate reports 180.
double translation_error_deg(const Vec3& t_true, const Vec3& t_est);

/// Absolute rotations indexed by frame.
struct Trajectory {
  std::vector<Mat3> rotations;
};

/// Rotation-only relative pose error at time step delta:
/// RMSE over the n - delta residuals angle((R_i^T R_{i+delta})^T (R~_i^T R~_{i+delta})),
/// in degrees.
double rpe_rmse_deg(const Trajectory& truth, const Trajectory& estimate, int delta);

/// RMSE(1).
double rpe1_deg(const Trajectory& truth, const Trajectory& estimate);

/// Mean of RMSE(delta) over delta = 1 .. n-1 (the delta = n term has no
/// residuals and is omitted).
double rpen_deg(const Trajectory& truth, const Trajectory& estimate);

}  // namespace pnec
