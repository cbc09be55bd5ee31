#pragma once

#include <filesystem>
#include <vector>

#include "pnec/geometry.hpp"

namespace pnec {

/// Grayscale image patch with a precomputed central-difference gradient.
/// Bilinear interpolation is used for off-grid samples.
class Patch {
 public:
  Patch(int width, int height, std::vector<double> intensity);

  static Patch from_pgm(const std::filesystem::path& path);

  int width() const { return width_; }
  int height() const { return height_; }

  double intensity_at(int x, int y) const { return intensity_[index(x, y)]; }

  /// Bilinear sample; throws out-of-bounds outside [0, w-1] x [0, h-1].
  double sample(double x, double y) const;

  /// Central-difference gradient; zero on the one-pixel boundary.
  Vec2 gradient_at(int x, int y) const;
  Vec2 sample_gradient(double x, double y) const;

  Vec2 center() const { return Vec2((width_ - 1) / 2.0, (height_ - 1) / 2.0); }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> intensity_;
  std::vector<Vec2> gradient_;
};

/// Pixel offsets, relative to the patch center, over which KLT energies and
/// Jacobians are accumulated.
struct Pattern {
  std::vector<Vec2> offsets;

  /// Default 52-offset pattern: the 8x8 half-pixel grid with the three cells
  /// in each corner removed (a rounded square). Stand-in layout; the exact
  /// 52-pixel arrangement used by upstream trackers is not reproduced here.
  static Pattern dense52();
};

/// SE(2) transform p -> R_theta p + (u, v) acting on center-relative offsets.
struct Se2Transform {
  double u = 0.0;
  double v = 0.0;
  double theta = 0.0;

  Vec2 apply(const Vec2& p) const;
};

/// Sum of squared mean-normalized intensity differences between the host
/// pattern and the transformed target pattern.
double klt_energy(const Patch& host, const Patch& target, const Se2Transform& transform,
                  const Pattern& pattern);

/// Covariance over (u px, v px, theta rad). `damped` marks patches whose
/// Gauss-Newton Hessian needed Tikhonov damping to invert (aperture-style
/// degeneracy); such covariances are usable but should be treated as suspect.
struct Se2Covariance {
  Mat3 matrix = Mat3::Zero();
  bool damped = false;
};

/// Laplace-approximation covariance of the SE(2) track parameters from the
/// host patch: Sigma = (J^T J)^-1 with the mean-normalized KLT Jacobians.
Se2Covariance se2_covariance(const Patch& host, const Pattern& pattern);

/// Marginalize to the 2x2 position block and rotate into the target frame:
/// Sigma_t = R_theta Sigma_h R_theta^T.
Mat2 position_covariance_in_target(const Se2Covariance& se2, double theta);

}  // namespace pnec
