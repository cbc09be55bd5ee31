#pragma once

#include <Eigen/Dense>

namespace pnec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Skew-symmetric matrix of u, so that skew(u) * v == u.cross(v).
Mat3 skew(const Vec3& u);

/// Cayley transform R = (I + skew(u)) * (I - skew(u))^-1. Defined for all
/// finite u; axis u/|u|, angle 2*atan(|u|), covers rotations with angle < pi.
Mat3 cayley_to_rotation(const Vec3& u);

/// Inverse of cayley_to_rotation. Throws for rotations with angle pi.
Vec3 rotation_to_cayley(const Mat3& rotation);

/// Direction on the unit sphere. theta in [0, pi] is the polar angle measured
/// from +z, phi in [0, 2*pi) the azimuth. The mapped vector is
/// (sin(theta) sin(phi), -sin(theta) cos(phi), cos(theta)).
struct SphericalDirection {
  double theta = 0.0;
  double phi = 0.0;
};

Vec3 spherical_to_unit(const SphericalDirection& direction);

/// Inverse mapping; at the poles (theta in {0, pi}) phi is returned as 0.
SphericalDirection unit_to_spherical(const Vec3& v);

/// Angle of a rotation matrix in radians, in [0, pi]. The trace argument is
/// clamped so roundoff never produces NaN.
double rotation_angle(const Mat3& rotation);

/// Rodrigues formula. The axis does not need to be normalized.
Mat3 rotation_from_axis_angle(const Vec3& axis, double angle);

bool is_unit_vector(const Vec3& v, double tol = 1e-12);
bool is_rotation_matrix(const Mat3& rotation, double tol = 1e-10);

}  // namespace pnec
