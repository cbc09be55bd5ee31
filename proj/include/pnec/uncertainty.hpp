#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pnec/geometry.hpp"

namespace pnec {

/// Sigma points of the unscented transform: 2n+1 points with weights
/// w0 = kappa / (n + kappa), wi = 1 / (2 (n + kappa)).
struct SigmaPointSet {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
};

/// Sigma points around mu with spread sqrt(n + kappa) along the Cholesky
/// columns of cov. A PSD but singular cov is factored after adding diagonal
/// jitter (1e-14, three escalating retries); indefinite input raises
/// invalid-covariance.
SigmaPointSet sigma_points(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                           double kappa = 1.0);

/// Rotation that maps the unit vector mu onto the +z axis (and the tangent
/// plane at mu onto the xy plane). Raises degenerate-alignment for mu near
/// (0, 0, -1), where the construction has a pole.
Mat3 omni_alignment_rotation(const Vec3& mu);

/// Pinhole intrinsics, stored as the inverse camera matrix.
struct CameraIntrinsics {
  Mat3 k_inverse = Mat3::Identity();

  static CameraIntrinsics from_pinhole(double fx, double fy, double cx, double cy);
  /// From a full upper-triangular camera matrix with positive diagonal.
  static CameraIntrinsics from_camera_matrix(const Mat3& k);

  /// Unprojection g(pixel) = K^-1 (u, v, 1)^T.
  Vec3 unproject(const Vec2& pixel) const;
  /// Unit bearing of a pixel.
  Vec3 bearing(const Vec2& pixel) const;
};

/// Bearing mean and 3x3 covariance produced by an unscented transform.
struct BearingWithCov {
  Vec3 bearing;  // renormalized to unit length
  Mat3 cov;
};

/// Propagate a 2D pixel covariance through unprojection + normalization onto
/// the unit sphere. Full-rank input yields a full-rank output.
BearingWithCov unscented_pinhole(const Vec2& pixel, const Mat2& cov, const CameraIntrinsics& k,
                                 double kappa = 1.0);

/// Propagate a tangent-plane covariance at the unit bearing mu onto the
/// sphere. cov2d lives in the tangent plane basis given by
/// omni_alignment_rotation(mu).
Mat3 unscented_omni(const Vec3& mu, const Mat2& cov2d, double kappa = 1.0);

}  // namespace pnec
