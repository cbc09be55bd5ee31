#include "pnec/uncertainty.hpp"

#include <cmath>

#include "pnec/errors.hpp"

namespace pnec {
namespace {

// Cholesky factor of a PSD matrix; singular input gets diagonal jitter with
// bounded retries per the uncertainty module contract.
Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  if (cov.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(n, n);

  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd candidate = cov;
    if (jitter > 0.0) candidate += jitter * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(candidate);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = (jitter == 0.0) ? 1e-14 : jitter * 10.0;
  }
  fail(ErrorCode::invalid_covariance, "Cholesky factorization failed; matrix is not PSD");
}

}  // namespace

SigmaPointSet sigma_points(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov, double kappa) {
  const Eigen::Index n = mu.size();
  if (cov.rows() != n || cov.cols() != n) {
    fail(ErrorCode::invalid_argument, "covariance dimension does not match mean");
  }
  if (static_cast<double>(n) + kappa <= 0.0) {
    fail(ErrorCode::invalid_argument, "n + kappa must be positive");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::invalid_covariance, "covariance is not symmetric");
  }

  const Eigen::MatrixXd chol = cholesky_psd(cov);
  const double spread = std::sqrt(static_cast<double>(n) + kappa);

  SigmaPointSet set;
  set.points.reserve(2 * n + 1);
  set.weights.reserve(2 * n + 1);
  set.points.push_back(mu);
  set.weights.push_back(kappa / (static_cast<double>(n) + kappa));
  const double w = 1.0 / (2.0 * (static_cast<double>(n) + kappa));
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.push_back(mu + spread * chol.col(i));
    set.weights.push_back(w);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.push_back(mu - spread * chol.col(i));
    set.weights.push_back(w);
  }
  return set;
}

Mat3 omni_alignment_rotation(const Vec3& mu) {
  const double norm = mu.norm();
  if (norm < 1e-12) fail(ErrorCode::invalid_argument, "zero direction");
  if (mu.z() / norm <= -1.0 + 1e-6) {
    fail(ErrorCode::degenerate_alignment, "direction too close to (0, 0, -1)");
  }
  const double m1 = mu.x();
  const double m2 = mu.y();
  const double m3 = mu.z();
  Mat3 r;
  r << norm - m1 * m1 / (norm + m3), -m1 * m2 / (norm + m3), -m1,  //
      -m1 * m2 / (norm + m3), norm - m2 * m2 / (norm + m3), -m2,   //
      m1, m2, m3;
  return r / norm;
}

CameraIntrinsics CameraIntrinsics::from_pinhole(double fx, double fy, double cx, double cy) {
  if (fx <= 0.0 || fy <= 0.0) fail(ErrorCode::invalid_argument, "focal lengths must be positive");
  CameraIntrinsics k;
  k.k_inverse << 1.0 / fx, 0.0, -cx / fx,  //
      0.0, 1.0 / fy, -cy / fy,             //
      0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::from_camera_matrix(const Mat3& k) {
  if (std::abs(k(1, 0)) > 0.0 || std::abs(k(2, 0)) > 0.0 || std::abs(k(2, 1)) > 0.0) {
    fail(ErrorCode::invalid_argument, "camera matrix must be upper triangular");
  }
  if (k(0, 0) <= 0.0 || k(1, 1) <= 0.0 || k(2, 2) <= 0.0) {
    fail(ErrorCode::invalid_argument, "camera matrix diagonal must be positive");
  }
  CameraIntrinsics result;
  result.k_inverse = k.inverse();
  return result;
}

Vec3 CameraIntrinsics::unproject(const Vec2& pixel) const {
  return k_inverse * Vec3(pixel.x(), pixel.y(), 1.0);
}

Vec3 CameraIntrinsics::bearing(const Vec2& pixel) const { return unproject(pixel).normalized(); }

BearingWithCov unscented_pinhole(const Vec2& pixel, const Mat2& cov, const CameraIntrinsics& k,
                                 double kappa) {
  if (cov.cwiseAbs().maxCoeff() == 0.0) {
    return BearingWithCov{k.bearing(pixel), Mat3::Zero()};
  }
  const SigmaPointSet set = sigma_points(pixel, cov, kappa);

  std::vector<Vec3> mapped(set.points.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const Vec3 ray = k.unproject(Vec2(set.points[i](0), set.points[i](1)));
    mapped[i] = ray.normalized();
  }

  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < mapped.size(); ++i) mean += set.weights[i] * mapped[i];
  Mat3 scatter = Mat3::Zero();
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const Vec3 d = mapped[i] - mean;
    scatter += set.weights[i] * d * d.transpose();
  }

  BearingWithCov result;
  result.bearing = mean.normalized();
  result.cov = scatter;
  return result;
}

Mat3 unscented_omni(const Vec3& mu, const Mat2& cov2d, double kappa) {
  if (!is_unit_vector(mu, 1e-9)) fail(ErrorCode::invalid_argument, "mean bearing must be unit");
  if (cov2d.cwiseAbs().maxCoeff() == 0.0) return Mat3::Zero();
  const Mat3 align = omni_alignment_rotation(mu);

  const Eigen::MatrixXd chol = cholesky_psd(cov2d);
  const double n = 2.0;
  if (n + kappa <= 0.0) fail(ErrorCode::invalid_argument, "n + kappa must be positive");
  const double spread = std::sqrt(n + kappa);

  std::vector<Vec3> points;
  std::vector<double> weights;
  points.reserve(5);
  weights.reserve(5);
  points.push_back(mu);
  weights.push_back(kappa / (n + kappa));
  const double w = 1.0 / (2.0 * (n + kappa));
  for (int i = 0; i < 2; ++i) {
    const Vec3 lifted = align.transpose() * Vec3(chol(0, i), chol(1, i), 0.0);
    points.push_back(mu + spread * lifted);
    weights.push_back(w);
  }
  for (int i = 0; i < 2; ++i) {
    const Vec3 lifted = align.transpose() * Vec3(chol(0, i), chol(1, i), 0.0);
    points.push_back(mu - spread * lifted);
    weights.push_back(w);
  }

  for (Vec3& p : points) p.normalize();

  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) mean += weights[i] * points[i];
  Mat3 scatter = Mat3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 d = points[i] - mean;
    scatter += weights[i] * d * d.transpose();
  }
  return scatter;
}

}  // namespace pnec
