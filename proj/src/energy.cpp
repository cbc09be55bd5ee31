#include "pnec/energy.hpp"

#include <cmath>

#include "pnec/errors.hpp"
#include "pnec/sym_eigen.hpp"

namespace pnec {

CorrespondenceSet::CorrespondenceSet(std::vector<BearingPair> pairs) : pairs_(std::move(pairs)) {
  if (pairs_.size() < 5) {
    fail(ErrorCode::degenerate_input, "at least five correspondences are required");
  }
  for (BearingPair& pair : pairs_) {
    const double norm_host = pair.f_host.norm();
    const double norm_target = pair.f_target.norm();
    if (norm_host < 1e-12 || norm_target < 1e-12) {
      fail(ErrorCode::invalid_argument, "bearing vectors must be nonzero");
    }
    // Idempotent: an already-unit vector is left bit-identical.
    if (std::abs(norm_host - 1.0) > 1e-12) pair.f_host /= norm_host;
    if (std::abs(norm_target - 1.0) > 1e-12) pair.f_target /= norm_target;
    pair.cov_target = 0.5 * (pair.cov_target + pair.cov_target.transpose()).eval();
    if (min_eigenvalue(pair.cov_target) < -1e-12) {
      fail(ErrorCode::invalid_covariance, "bearing covariance must be PSD");
    }
  }
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double acc = 0.0;
    for (const double v : values) acc += v;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

Vec3 epipolar_normal(const BearingPair& pair, const Mat3& rotation) {
  return pair.f_host.cross(rotation * pair.f_target);
}

double nec_residual(const Vec3& translation, const Vec3& normal) {
  return std::abs(translation.dot(normal));
}

double nec_energy(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const Vec3& translation) {
  std::vector<double> terms;
  terms.reserve(pairs.size());
  for (const BearingPair& pair : pairs) {
    const double e = translation.dot(epipolar_normal(pair, rotation));
    terms.push_back(e * e);
  }
  return pairwise_sum(terms);
}

Mat3 gram_matrix(std::span<const BearingPair> pairs, const Mat3& rotation) {
  Mat3 m = Mat3::Zero();
  for (const BearingPair& pair : pairs) {
    const Vec3 n = epipolar_normal(pair, rotation);
    m += n * n.transpose();
  }
  return m;
}

double residual_variance(const BearingPair& pair, const Mat3& rotation, const Vec3& translation,
                         const Regularization& reg) {
  // t^T skew(f) R Sigma R^T skew(f)^T t, evaluated as a chain on (f x t).
  const Vec3 ft = pair.f_host.cross(translation);  // skew(f)^T t = -f x t = t x f; sign cancels
  const Vec3 rtf = rotation.transpose() * ft;
  return rtf.dot(pair.cov_target * rtf) + reg.c;
}

double pnec_energy(std::span<const BearingPair> pairs, const Mat3& rotation,
                   const Vec3& translation, const Regularization& reg) {
  std::vector<double> terms;
  terms.reserve(pairs.size());
  for (const BearingPair& pair : pairs) {
    const double e = translation.dot(epipolar_normal(pair, rotation));
    const double variance = residual_variance(pair, rotation, translation, reg);
    if (variance < 1e-300) {
      fail(ErrorCode::singularity, "residual variance vanished (unregularized evaluation)");
    }
    terms.push_back(e * e / variance);
  }
  return pairwise_sum(terms);
}

Mat3 weighted_gram(std::span<const BearingPair> pairs, const Mat3& rotation,
                   std::span<const double> sigma_tilde) {
  if (sigma_tilde.size() != pairs.size()) {
    fail(ErrorCode::invalid_argument, "one weight per correspondence is required");
  }
  Mat3 m = Mat3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(sigma_tilde[i] > 0.0)) fail(ErrorCode::invalid_weight, "weights must be positive");
    const Vec3 n = epipolar_normal(pairs[i], rotation);
    m += n * n.transpose() / (sigma_tilde[i] * sigma_tilde[i]);
  }
  return m;
}

double directional_limit(const Vec3& k, const BearingPair& pair, const Mat3& rotation) {
  const Vec3 rk = rotation.transpose() * k;
  const double denominator = rk.dot(pair.cov_target * rk);
  if (denominator < 1e-300) {
    fail(ErrorCode::undefined_limit, "k^T R Sigma R^T k vanished");
  }
  const double numerator = k.dot(rotation * pair.f_target);
  return numerator * numerator / denominator;
}

Mat3 normal_covariance(const BearingPair& pair, const Mat3& rotation) {
  const Mat3 s = skew(pair.f_host);
  return s * rotation * pair.cov_target * rotation.transpose() * s.transpose();
}

}  // namespace pnec
