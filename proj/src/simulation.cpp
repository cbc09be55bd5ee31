#include "pnec/simulation.hpp"

#include <cmath>
#include <string>

#include "pnec/errors.hpp"

namespace pnec {

const char* to_string(NoiseType type) {
  switch (type) {
    case NoiseType::iso_homo: return "iso-homo";
    case NoiseType::iso_inhomo: return "iso-inhomo";
    case NoiseType::aniso_homo: return "aniso-homo";
    case NoiseType::aniso_inhomo: return "aniso-inhomo";
  }
  return "unknown";
}

NoiseType noise_type_from_string(const std::string& name) {
  if (name == "iso-homo") return NoiseType::iso_homo;
  if (name == "iso-inhomo") return NoiseType::iso_inhomo;
  if (name == "aniso-homo") return NoiseType::aniso_homo;
  if (name == "aniso-inhomo") return NoiseType::aniso_inhomo;
  fail(ErrorCode::config_error, "unknown noise type '" + name + "'");
}

const char* to_string(CameraModel model) {
  return model == CameraModel::omnidirectional ? "omni" : "pinhole";
}

CameraModel camera_model_from_string(const std::string& name) {
  if (name == "omni" || name == "omnidirectional") return CameraModel::omnidirectional;
  if (name == "pinhole") return CameraModel::pinhole;
  fail(ErrorCode::config_error, "unknown camera model '" + name + "'");
}

Mat2 covariance_from_params(const CovarianceParams& params) {
  const double c = std::cos(params.alpha);
  const double s = std::sin(params.alpha);
  Mat2 rot;
  rot << c, -s, s, c;
  Mat2 diag = Mat2::Zero();
  diag(0, 0) = params.beta;
  diag(1, 1) = 1.0 - params.beta;
  return params.s * rot * diag * rot.transpose();
}

CovarianceParams sample_covariance_params(const NoiseSpec& spec, SplitMix64& rng,
                                          const ExperimentParams& experiment) {
  CovarianceParams params;
  switch (spec.type) {
    case NoiseType::iso_homo:
      params = {1.0, 0.5, 0.0};
      break;
    case NoiseType::iso_inhomo:
      params.s = rng.uniform(spec.s_range[0], spec.s_range[1]);
      params.beta = 0.5;
      params.alpha = 0.0;
      break;
    case NoiseType::aniso_homo:
      params.s = 1.0;
      // beta is drawn once per experiment; without an experiment scope any
      // caller-provided value is still honored.
      params.beta = experiment.shared_beta
                        ? *experiment.shared_beta
                        : rng.uniform(spec.beta_range[0], spec.beta_range[1]);
      params.alpha = rng.uniform(spec.alpha_range[0], spec.alpha_range[1]);
      break;
    case NoiseType::aniso_inhomo:
      params.s = rng.uniform(spec.s_range[0], spec.s_range[1]);
      params.beta = experiment.shared_beta
                        ? *experiment.shared_beta
                        : rng.uniform(spec.beta_range[0], spec.beta_range[1]);
      params.alpha = rng.uniform(spec.alpha_range[0], spec.alpha_range[1]);
      break;
  }
  return params;
}

Mat2 sample_covariance(const NoiseSpec& spec, SplitMix64& rng,
                       const ExperimentParams& experiment) {
  return covariance_from_params(sample_covariance_params(spec, rng, experiment));
}

void SceneConfig::validate() const {
  if (n_points < 5) fail(ErrorCode::invalid_argument, "n_points must be >= 5");
  if (!(depth_min > 0.0 && depth_max > depth_min)) {
    fail(ErrorCode::invalid_argument, "invalid depth range");
  }
  if (max_bearing_angle_rad &&
      !(*max_bearing_angle_rad > 0.0 && *max_bearing_angle_rad <= kPi)) {
    fail(ErrorCode::invalid_argument, "max bearing angle must be in (0, pi]");
  }
  if (max_rotation < 0.0 || max_translation < 0.0) {
    fail(ErrorCode::invalid_argument, "rotation/translation bounds must be >= 0");
  }
  if (!(focal_px > 0.0)) fail(ErrorCode::invalid_argument, "focal length must be positive");
}

CameraIntrinsics SceneConfig::intrinsics() const {
  return CameraIntrinsics::from_pinhole(focal_px, focal_px, image_width / 2.0,
                                        image_height / 2.0);
}

double SceneConfig::bearing_cap_rad(CameraModel camera) const {
  if (max_bearing_angle_rad) return *max_bearing_angle_rad;
  return camera == CameraModel::omnidirectional ? kPi : 55.0 * kPi / 180.0;
}

namespace {

Vec2 project_pinhole(const Vec3& point, const SceneConfig& scene) {
  return Vec2(scene.focal_px * point.x() / point.z() + scene.image_width / 2.0,
              scene.focal_px * point.y() / point.z() + scene.image_height / 2.0);
}

// Gaussian sample with the given 2x2 covariance (Cholesky whitening with the
// same jittered factorization used by the unscented transform).
Vec2 gaussian_2d(const Mat2& cov, SplitMix64& rng) {
  const double z0 = rng.normal();
  const double z1 = rng.normal();
  if (cov.cwiseAbs().maxCoeff() == 0.0) return Vec2::Zero();
  // Closed-form Cholesky of a 2x2 PSD matrix with tiny diagonal safeguard.
  const double a = std::sqrt(std::max(cov(0, 0), 0.0));
  if (a < 1e-154) {
    const double d = std::sqrt(std::max(cov(1, 1), 0.0));
    return Vec2(0.0, d * z1);
  }
  const double b = cov(1, 0) / a;
  const double d = std::sqrt(std::max(cov(1, 1) - b * b, 0.0));
  return Vec2(a * z0, b * z0 + d * z1);
}

}  // namespace

ProblemInstance generate_instance(const SceneConfig& scene, const NoiseSpec& spec,
                                  CameraModel camera, std::uint64_t seed,
                                  const ExperimentParams& experiment, double kappa) {
  scene.validate();
  if (spec.level_px < 0.0) fail(ErrorCode::invalid_argument, "noise level must be >= 0");

  SplitMix64 rng(derive_seed(seed, {0x706f7365ull}));  // pose stream
  SplitMix64 feature_rng(derive_seed(seed, {0x66656174ull}));

  // Shared beta for homogeneous anisotropy unless the experiment fixed one.
  ExperimentParams scoped = experiment;
  if (!scoped.shared_beta && spec.type == NoiseType::aniso_homo) {
    scoped.shared_beta = rng.uniform(spec.beta_range[0], spec.beta_range[1]);
  }

  const Mat3 rotation =
      rotation_from_axis_angle(rng.unit_vector(), rng.uniform(0.0, scene.max_rotation));
  Vec3 translation_dir = Vec3(0.0, 0.0, 1.0);
  double translation_magnitude = 0.0;
  if (scene.translation_enabled && scene.max_translation > 0.0) {
    translation_dir = rng.unit_vector();
    translation_magnitude = rng.uniform(0.0, scene.max_translation);
  }
  const bool has_translation = translation_magnitude > 0.0;
  const Vec3 translation =
      has_translation ? Vec3(translation_magnitude * translation_dir) : Vec3::Zero();
  const CameraIntrinsics intrinsics = scene.intrinsics();
  const double sigma_scale = 2.0 * spec.level_px;  // factor-2 std compensation

  std::vector<BearingPair> pairs;
  std::vector<CovarianceParams> cov_params;
  std::vector<Vec2> observed_pixels;
  pairs.reserve(scene.n_points);
  cov_params.reserve(scene.n_points);
  if (camera == CameraModel::pinhole) observed_pixels.reserve(scene.n_points);

  const double cos_cap = std::cos(scene.bearing_cap_rad(camera));
  for (int i = 0; i < scene.n_points; ++i) {
    Vec3 point_host;
    Vec3 point_target;
    bool placed = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      // Uniform direction on the spherical cap around +z, uniform depth.
      const double z = feature_rng.uniform(cos_cap, 1.0);
      const double phi = feature_rng.uniform(0.0, 2.0 * kPi);
      const double radius = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Vec3 direction(radius * std::cos(phi), radius * std::sin(phi), z);
      point_host = feature_rng.uniform(scene.depth_min, scene.depth_max) * direction;
      point_target = rotation.transpose() * (point_host - translation);
      if (camera == CameraModel::pinhole && point_target.z() <= 1e-6) continue;
      if (point_target.norm() <= 1e-9) continue;
      // The tangent-plane lift is singular at the -z antipode; keep enough
      // margin that the noisy bearing cannot reach it either.
      if (camera == CameraModel::omnidirectional &&
          point_target.normalized().z() <= -0.9999) {
        continue;
      }
      placed = true;
      break;
    }
    if (!placed) {
      fail(ErrorCode::degenerate_configuration, "could not place a point in front of the camera");
    }

    const CovarianceParams params = sample_covariance_params(spec, feature_rng, scoped);
    const Mat2 cov_px = covariance_from_params(params);
    const Mat2 noise_cov = (sigma_scale * sigma_scale) * cov_px;
    const Vec2 offset = gaussian_2d(noise_cov, feature_rng);

    BearingPair pair;
    pair.f_host = point_host.normalized();
    if (camera == CameraModel::pinhole) {
      const Vec2 pixel = project_pinhole(point_target, scene) + offset;
      pair.f_target = intrinsics.bearing(pixel);
      pair.cov_target = unscented_pinhole(pixel, noise_cov, intrinsics, kappa).cov;
      observed_pixels.push_back(pixel);
    } else {
      const Vec3 exact = point_target.normalized();
      const Mat3 align = omni_alignment_rotation(exact);
      const Vec3 lifted =
          align.transpose() * Vec3(offset.x() / scene.focal_px, offset.y() / scene.focal_px, 0.0);
      pair.f_target = (exact + lifted).normalized();
      const Mat2 tangent_cov = noise_cov / (scene.focal_px * scene.focal_px);
      pair.cov_target = unscented_omni(pair.f_target, tangent_cov, kappa);
    }
    cov_params.push_back(params);
    pairs.push_back(pair);
  }

  return ProblemInstance{
      .pairs = CorrespondenceSet(std::move(pairs)),
      .true_rotation = rotation,
      .true_translation_dir = translation_dir,
      .true_translation_magnitude = translation_magnitude,
      .has_translation = has_translation,
      .cov_params = std::move(cov_params),
      .observed_pixels = std::move(observed_pixels),
      .camera = camera,
      .scene = scene,
      .noise_level_px = spec.level_px,
      .kappa = kappa,
      .seed = seed,
  };
}

ProblemInstance offset_covariances(const ProblemInstance& instance, double offset_fraction,
                                   SplitMix64& rng) {
  if (offset_fraction < 0.0 || offset_fraction > 1.0) {
    fail(ErrorCode::invalid_argument, "offset fraction must be in [0, 1]");
  }
  const NoiseSpec defaults;  // parameter ranges for clamping and widths
  const double s_width = defaults.s_range[1] - defaults.s_range[0];
  const double beta_width = defaults.beta_range[1] - defaults.beta_range[0];
  const double alpha_width = defaults.alpha_range[1] - defaults.alpha_range[0];

  ProblemInstance perturbed = instance;
  const double sigma_scale = 2.0 * instance.noise_level_px;
  const CameraIntrinsics intrinsics = instance.scene.intrinsics();

  std::vector<BearingPair> pairs(instance.pairs.pairs().begin(), instance.pairs.pairs().end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CovarianceParams params = instance.cov_params[i];
    params.s = std::clamp(params.s + rng.uniform(-1.0, 1.0) * offset_fraction * s_width,
                          defaults.s_range[0], defaults.s_range[1]);
    params.beta = std::clamp(params.beta + rng.uniform(-1.0, 1.0) * offset_fraction * beta_width,
                             defaults.beta_range[0], defaults.beta_range[1]);
    params.alpha =
        std::clamp(params.alpha + rng.uniform(-1.0, 1.0) * offset_fraction * alpha_width,
                   defaults.alpha_range[0], defaults.alpha_range[1]);
    perturbed.cov_params[i] = params;

    const Mat2 noise_cov = (sigma_scale * sigma_scale) * covariance_from_params(params);
    if (instance.camera == CameraModel::pinhole) {
      pairs[i].cov_target =
          unscented_pinhole(instance.observed_pixels[i], noise_cov, intrinsics, instance.kappa)
              .cov;
    } else {
      const double focal = instance.scene.focal_px;
      pairs[i].cov_target =
          unscented_omni(pairs[i].f_target, noise_cov / (focal * focal), instance.kappa);
    }
  }
  perturbed.pairs = CorrespondenceSet(std::move(pairs));
  return perturbed;
}

}  // namespace pnec
