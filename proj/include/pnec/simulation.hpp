#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pnec/energy.hpp"
#include "pnec/geometry.hpp"
#include "pnec/optimizer.hpp"
#include "pnec/rng.hpp"
#include "pnec/uncertainty.hpp"

namespace pnec {

enum class NoiseType { iso_homo, iso_inhomo, aniso_homo, aniso_inhomo };

const char* to_string(NoiseType type);
NoiseType noise_type_from_string(const std::string& name);

/// Feature position noise: Sigma_2D = s R_alpha diag(beta, 1-beta) R_alpha^T,
/// scaled by the level in pixels at injection time.
struct NoiseSpec {
  NoiseType type = NoiseType::aniso_inhomo;
  double level_px = 1.0;
  std::array<double, 2> s_range = {0.5, 1.5};
  std::array<double, 2> beta_range = {0.5, 1.0};
  std::array<double, 2> alpha_range = {0.0, kPi};
};

/// Generating parameters of one 2D covariance.
struct CovarianceParams {
  double s = 1.0;
  double beta = 0.5;
  double alpha = 0.0;
};

Mat2 covariance_from_params(const CovarianceParams& params);

/// Parameters shared across one experiment cell (the homogeneous-anisotropy
/// beta is drawn once per experiment, not per instance).
struct ExperimentParams {
  std::optional<double> shared_beta;
};

CovarianceParams sample_covariance_params(const NoiseSpec& spec, SplitMix64& rng,
                                          const ExperimentParams& experiment = {});

/// Draw one covariance matrix according to the noise type. Trace equals s.
Mat2 sample_covariance(const NoiseSpec& spec, SplitMix64& rng,
                       const ExperimentParams& experiment = {});

enum class CameraModel { omnidirectional, pinhole };

const char* to_string(CameraModel model);
CameraModel camera_model_from_string(const std::string& name);

struct SceneConfig {
  int n_points = 10;
  bool translation_enabled = true;
  double depth_min = 4.0;  // meters
  double depth_max = 8.0;
  /// Host-frame point directions are uniform on the spherical cap of this
  /// half-angle around +z, at depths in [depth_min, depth_max]. Unset: the
  /// full sphere for the omnidirectional model, 55 degrees for the pinhole
  /// model (a virtual camera; projections are not clipped to the image).
  std::optional<double> max_bearing_angle_rad;
  double max_rotation = 0.5;     // radians
  double max_translation = 2.0;  // meters
  double focal_px = 800.0;
  int image_width = 752;
  int image_height = 480;

  void validate() const;
  CameraIntrinsics intrinsics() const;
  double bearing_cap_rad(CameraModel camera) const;
};

/// A generated two-frame problem. The stored pairs carry the noisy target
/// bearings and the covariances propagated from the (scaled) generating 2D
/// covariances; observed pixels / parameters are retained so covariances can
/// be rebuilt with perturbed parameters (offset experiments).
struct ProblemInstance {
  CorrespondenceSet pairs;
  Mat3 true_rotation = Mat3::Identity();
  Vec3 true_translation_dir = Vec3(0.0, 0.0, 1.0);  // unit; arbitrary when magnitude is 0
  double true_translation_magnitude = 0.0;
  bool has_translation = false;

  std::vector<CovarianceParams> cov_params;  // per feature
  std::vector<Vec2> observed_pixels;         // pinhole only
  CameraModel camera = CameraModel::omnidirectional;
  SceneConfig scene;
  double noise_level_px = 1.0;
  double kappa = 1.0;
  std::uint64_t seed = 0;

  RelativePose truth() const {
    return RelativePose{true_rotation, true_translation_dir};
  }
};

/// Seeded generation of a synthetic instance. Noise is added to the target
/// frame only, with the standard deviation scaled by 2 to compensate for the
/// noise-free host frame. Pinhole noise is injected in the image plane;
/// omnidirectional noise in the tangent plane, expressed in pixels via the
/// focal length.
ProblemInstance generate_instance(const SceneConfig& scene, const NoiseSpec& spec,
                                  CameraModel camera, std::uint64_t seed,
                                  const ExperimentParams& experiment = {}, double kappa = 1.0);

/// Copy of the instance whose attached covariances are rebuilt from the
/// generating parameters perturbed by uniform offsets up to offset_fraction of
/// each parameter's range, clamped back into range. The noise realization
/// (the observed bearings) is unchanged.
ProblemInstance offset_covariances(const ProblemInstance& instance, double offset_fraction,
                                   SplitMix64& rng);

}  // namespace pnec
