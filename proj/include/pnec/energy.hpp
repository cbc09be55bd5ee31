#pragma once

#include <span>
#include <vector>

#include "pnec/geometry.hpp"

namespace pnec {

/// One feature correspondence: unit bearings in host and target frame plus
/// the 3x3 covariance of the target bearing.
struct BearingPair {
  Vec3 f_host;
  Vec3 f_target;
  Mat3 cov_target = Mat3::Zero();
};

/// Validated set of correspondences (at least five, unit bearings, PSD
/// covariances). Immutable after construction.
class CorrespondenceSet {
 public:
  explicit CorrespondenceSet(std::vector<BearingPair> pairs);

  std::span<const BearingPair> pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const BearingPair& operator[](std::size_t i) const { return pairs_[i]; }

 private:
  std::vector<BearingPair> pairs_;
};

/// Additive variance regularization sigma'^2 = sigma^2 + c.
struct Regularization {
  double c = 1e-10;
};

/// Pairwise (tree) summation; keeps small sums reproducible and accurate.
double pairwise_sum(std::span<const double> values);

/// Epipolar plane normal n = f x (R f').
Vec3 epipolar_normal(const BearingPair& pair, const Mat3& rotation);

/// |t . n|
double nec_residual(const Vec3& translation, const Vec3& normal);

double nec_energy(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const Vec3& translation);

/// Gramian M = sum_i n_i n_i^T with t^T M t == nec_energy.
Mat3 gram_matrix(std::span<const BearingPair> pairs, const Mat3& rotation);

/// Regularized residual variance sigma'^2 = t^T skew(f) R Sigma R^T skew(f)^T t + c.
double residual_variance(const BearingPair& pair, const Mat3& rotation, const Vec3& translation,
                         const Regularization& reg);

/// sum_i e_i^2 / sigma'_i^2
double pnec_energy(std::span<const BearingPair> pairs, const Mat3& rotation,
                   const Vec3& translation, const Regularization& reg);

/// M_P = sum_i n_i n_i^T / sigma_tilde_i^2 for fixed per-pair weights.
Mat3 weighted_gram(std::span<const BearingPair> pairs, const Mat3& rotation,
                   std::span<const double> sigma_tilde);

/// Directional limit of the unregularized weighted residual for t approaching
/// the host bearing along the great circle with cross-product axis k (k must
/// be orthogonal to f_host): |k^T R f'|^2 / (k^T R Sigma R^T k).
double directional_limit(const Vec3& k, const BearingPair& pair, const Mat3& rotation);

/// Covariance of the epipolar normal, skew(f) R Sigma R^T skew(f)^T.
/// Rank <= 2 with f_host in its null space.
Mat3 normal_covariance(const BearingPair& pair, const Mat3& rotation);

}  // namespace pnec
