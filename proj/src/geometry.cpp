#include "pnec/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "pnec/errors.hpp"

namespace pnec {

Mat3 skew(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),  //
      u.z(), 0.0, -u.x(),   //
      -u.y(), u.x(), 0.0;
  return m;
}

Mat3 cayley_to_rotation(const Vec3& u) {
  // Closed form of (I + skew(u)) (I - skew(u))^-1.
  const double squared = u.squaredNorm();
  const double scale = 1.0 / (1.0 + squared);
  Mat3 r = (1.0 - squared) * Mat3::Identity() + 2.0 * u * u.transpose() + 2.0 * skew(u);
  return scale * r;
}

Vec3 rotation_to_cayley(const Mat3& rotation) {
  // skew(u) = (R - I)(R + I)^-1; (R + I) is singular only for angle pi.
  const Mat3 sum = rotation + Mat3::Identity();
  if (std::abs(sum.determinant()) < 1e-12) {
    fail(ErrorCode::invalid_argument, "rotation angle too close to pi for Cayley parameters");
  }
  const Mat3 u_hat = (rotation - Mat3::Identity()) * sum.inverse();
  return Vec3(u_hat(2, 1), u_hat(0, 2), u_hat(1, 0));
}

Vec3 spherical_to_unit(const SphericalDirection& direction) {
  const double st = std::sin(direction.theta);
  return Vec3(st * std::sin(direction.phi), -st * std::cos(direction.phi),
              std::cos(direction.theta));
}

SphericalDirection unit_to_spherical(const Vec3& v) {
  SphericalDirection direction;
  direction.theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
  const double st = std::hypot(v.x(), v.y());
  if (st < 1e-15) {
    direction.phi = 0.0;  // pole convention
    return direction;
  }
  double phi = std::atan2(v.x(), -v.y());
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi -= 2.0 * kPi;
  direction.phi = phi;
  return direction;
}

double rotation_angle(const Mat3& rotation) {
  // atan2 form of arccos((tr - 1) / 2): analytically identical on SO(3), but
  // the skew part resolves angles below sqrt(eps) that the trace alone
  // cannot, and the clamped cosine keeps roundoff at the ends from producing
  // NaN.
  const Vec3 vee(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                 rotation(1, 0) - rotation(0, 1));
  const double sine = 0.5 * vee.norm();
  const double cosine = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(sine, cosine);
}

Mat3 rotation_from_axis_angle(const Vec3& axis, double angle) {
  const double norm = axis.norm();
  if (norm < 1e-300) {
    if (std::abs(angle) < 1e-300) return Mat3::Identity();
    fail(ErrorCode::invalid_argument, "zero axis with nonzero angle");
  }
  const Vec3 n = axis / norm;
  const Mat3 k = skew(n);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

bool is_unit_vector(const Vec3& v, double tol) { return std::abs(v.norm() - 1.0) <= tol; }

bool is_rotation_matrix(const Mat3& rotation, double tol) {
  const Mat3 residual = rotation * rotation.transpose() - Mat3::Identity();
  if (residual.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

}  // namespace pnec
