#include "pnec/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "pnec/errors.hpp"
#include "pnec/sym_eigen.hpp"

namespace pnec {
namespace {

constexpr double kDampingFloor = 1e-14;
constexpr double kDampingOverflow = 1e16;

// Per-pair quantities that depend on (pairs, R, c) but not on t. Rebuilt once
// per rotation, then reused across the lattice scan and SCF steps.
struct PoseCache {
  std::vector<Vec3> normals;
  std::vector<Mat3> b_matrices;  // skew(f) R Sigma R^T skew(f)^T + c I
  mutable std::vector<double> terms;

  void rebuild(std::span<const BearingPair> pairs, const Mat3& rotation, double c) {
    normals.resize(pairs.size());
    b_matrices.resize(pairs.size());
    terms.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const BearingPair& pair = pairs[i];
      normals[i] = pair.f_host.cross(rotation * pair.f_target);
      const Mat3 s = skew(pair.f_host);
      b_matrices[i] = s * rotation * pair.cov_target * rotation.transpose() * s.transpose() +
                      c * Mat3::Identity();
    }
  }

  double energy(const Vec3& t) const {
    for (std::size_t i = 0; i < normals.size(); ++i) {
      const double e = t.dot(normals[i]);
      const double beta = t.dot(b_matrices[i] * t);
      if (beta < 1e-300) {
        fail(ErrorCode::singularity, "t^T B t vanished in SCF energy");
      }
      terms[i] = e * e / beta;
    }
    return pairwise_sum(terms);
  }

  Mat3 e_matrix(const Vec3& t) const {
    Mat3 e = Mat3::Zero();
    for (std::size_t i = 0; i < normals.size(); ++i) {
      const double alpha = t.dot(normals[i]) * t.dot(normals[i]);
      const double beta = t.dot(b_matrices[i] * t);
      if (beta < 1e-300) {
        fail(ErrorCode::singularity, "t^T B t vanished in SCF E-matrix");
      }
      e += normals[i] * normals[i].transpose() / beta - (alpha / (beta * beta)) * b_matrices[i];
    }
    return e;
  }
};

// lambda_min of the weighted Gramian. The value is re-evaluated as the
// weighted energy at the eigenvector: each t.n_i cancellation happens before
// squaring, which resolves near-zero objectives far below the eps * |M|
// floor of the eigen-decomposition (needed for noise-free convergence).
double weighted_objective(std::span<const BearingPair> pairs, std::span<const double> sigma_tilde,
                          const Mat3& rotation) {
  Mat3 m = Mat3::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec3 n = pairs[i].f_host.cross(rotation * pairs[i].f_target);
    m += n * n.transpose() / (sigma_tilde[i] * sigma_tilde[i]);
  }
  const Vec3 v = min_eigenpair(m).second;
  double energy = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = v.dot(pairs[i].f_host.cross(rotation * pairs[i].f_target));
    energy += e * e / (sigma_tilde[i] * sigma_tilde[i]);
  }
  return energy;
}

Mat3 numeric_hessian(std::span<const BearingPair> pairs, std::span<const double> sigma_tilde,
                     const Mat3& rotation, double f0, double step) {
  Mat3 h;
  const auto eval = [&](const Vec3& delta) {
    return weighted_objective(pairs, sigma_tilde, rotation * cayley_to_rotation(delta));
  };
  for (int k = 0; k < 3; ++k) {
    Vec3 dk = Vec3::Zero();
    dk[k] = step;
    h(k, k) = (eval(dk) - 2.0 * f0 + eval(-dk)) / (step * step);
  }
  for (int k = 0; k < 3; ++k) {
    for (int l = k + 1; l < 3; ++l) {
      Vec3 dpp = Vec3::Zero();
      dpp[k] = step;
      dpp[l] = step;
      Vec3 dpm = Vec3::Zero();
      dpm[k] = step;
      dpm[l] = -step;
      const double value =
          (eval(dpp) - eval(dpm) - eval(-dpm) + eval(-dpp)) / (4.0 * step * step);
      h(k, l) = value;
      h(l, k) = value;
    }
  }
  return h;
}

void check_not_degenerate(std::span<const BearingPair> pairs) {
  const Vec3& reference = pairs.front().f_host;
  for (const BearingPair& pair : pairs) {
    if (reference.cross(pair.f_host).norm() > 1e-9) return;
  }
  fail(ErrorCode::degenerate_configuration, "all host bearings are parallel");
}

std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace

void SolverConfig::validate() const {
  if (outer_iterations < 1) fail(ErrorCode::invalid_argument, "outer_iterations must be >= 1");
  if (scf_iterations < 1) fail(ErrorCode::invalid_argument, "scf_iterations must be >= 1");
  if (lattice_points < 2) fail(ErrorCode::invalid_argument, "lattice_points must be >= 2");
  if (regularization < 0.0) fail(ErrorCode::invalid_argument, "regularization must be >= 0");
  if (lm_max_iterations < 1) fail(ErrorCode::invalid_argument, "lm_max_iterations must be >= 1");
  if (!(lm_tolerance > 0.0)) fail(ErrorCode::invalid_argument, "lm_tolerance must be > 0");
  if (3.0 + kappa <= 0.0) fail(ErrorCode::invalid_argument, "kappa too negative");
}

std::vector<Vec3> fibonacci_lattice(int count) {
  if (count < 2) fail(ErrorCode::invalid_argument, "lattice needs at least two points");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  points.reserve(count);
  for (int k = 1; k <= count; ++k) {
    const double y = 1.0 - 2.0 * static_cast<double>(k - 1) / static_cast<double>(count - 1);
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double angle = static_cast<double>(k - 1) * golden_angle;
    points.emplace_back(r * std::cos(angle), y, r * std::sin(angle));
  }
  return points;
}

Mat3 scf_e_matrix(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const Vec3& translation, double c) {
  PoseCache cache;
  cache.rebuild(pairs, rotation, c);
  return cache.e_matrix(translation);
}

namespace {

// Guarded SCF fixed-point iteration. At a stationary point E t is parallel
// to t (t^T E t = 0 by scale invariance, so E t itself vanishes there), and
// the plain step maps t to the eigenvector of the smallest eigenvalue, which
// continues the current energy basin. The raw iteration is not monotone and
// can cycle or leave the basin on hard instances, so an eigenvector step is
// accepted only when it does not increase the energy and is damped along the
// chord otherwise. A tangential-gradient polish (the gradient is 2 E t)
// finishes the convergence; monotonicity makes the final iterate the best
// one seen, so the result never loses to its start.
Vec3 scf_iterate(const PoseCache& cache, const Vec3& start, int iterations) {
  Vec3 t = start;
  double energy = cache.energy(start);

  for (int s = 0; s < iterations; ++s) {
    const Mat3 e = cache.e_matrix(t);
    auto [value, vector] = min_eigenpair(e);
    (void)value;
    if (!vector.allFinite()) fail(ErrorCode::numeric_failure, "SCF eigenvector not finite");
    if (vector.dot(t) < 0.0) vector = -vector;

    const double candidate_energy = cache.energy(vector);
    if (candidate_energy <= energy) {
      const bool converged = (vector - t).norm() <= 1e-15;
      t = vector;
      energy = candidate_energy;
      if (converged) break;
      continue;
    }
    bool moved = false;
    for (double gamma = 0.5; gamma > 1e-4; gamma *= 0.5) {
      const Vec3 damped = (t + gamma * (vector - t)).normalized();
      const double damped_energy = cache.energy(damped);
      if (damped_energy < energy) {
        t = damped;
        energy = damped_energy;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  // Projected gradient descent on the sphere (the gradient is 2 E t) to move
  // deep into the attracting basin.
  double step = 0.25;
  for (int iteration = 0; iteration < 300; ++iteration) {
    const Mat3 e = cache.e_matrix(t);
    const Vec3 gradient = 2.0 * (e * t);
    const Vec3 tangent = gradient - gradient.dot(t) * t;
    if (tangent.norm() <= 1e-9) break;
    bool moved = false;
    while (step > 1e-17) {
      const Vec3 candidate = (t - step * tangent).normalized();
      const double candidate_energy = cache.energy(candidate);
      if (candidate_energy < energy) {
        t = candidate;
        energy = candidate_energy;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  // Pure fixed-point iterations finish the convergence: inside the basin the
  // eigenvector map contracts without energy-comparison noise, driving the
  // residual |E t - (t^T E t) t| to the eps * |E| level.
  Vec3 refined = t;
  bool converged = false;
  for (int iteration = 0; iteration < 60; ++iteration) {
    const Mat3 e = cache.e_matrix(refined);
    auto [value, vector] = min_eigenpair(e);
    (void)value;
    if (!vector.allFinite()) break;
    if (vector.dot(refined) < 0.0) vector = -vector;
    if (vector.dot(refined) < 0.9) break;  // leaving the basin, abort
    const double delta = (vector - refined).norm();
    refined = vector;
    if (delta <= 1e-15) {
      converged = true;
      break;
    }
  }
  if (converged && cache.energy(refined) <= energy + 1e-12 * std::max(energy, 1.0)) {
    return refined;
  }
  return t;
}

}  // namespace

Vec3 scf_optimize(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const SolverConfig& config) {
  PoseCache cache;
  cache.rebuild(pairs, rotation, config.regularization);

  const std::vector<Vec3> lattice = fibonacci_lattice(config.lattice_points);
  Vec3 best_t = lattice.front();
  double best_energy = cache.energy(best_t);
  for (std::size_t k = 1; k < lattice.size(); ++k) {
    const double candidate = cache.energy(lattice[k]);
    if (candidate < best_energy) {
      best_energy = candidate;
      best_t = lattice[k];
    }
  }
  return scf_iterate(cache, best_t, config.scf_iterations);
}

std::pair<Vec3, double> nec_translation(std::span<const BearingPair> pairs,
                                        const Mat3& rotation) {
  const auto [value, vector] = min_eigenpair(gram_matrix(pairs, rotation));
  (void)value;
  // Re-evaluate the eigenvalue as the energy at the eigenvector: for
  // rank-deficient Gramians this resolves values far below the eps * |M|
  // floor of any eigensolver (the cancellation happens inside each t.n_i
  // before squaring).
  return {vector, nec_energy(pairs, rotation, vector)};
}

Vec3 rotation_objective_gradient(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation,
                                 double step) {
  Vec3 gradient;
  for (int k = 0; k < 3; ++k) {
    Vec3 delta = Vec3::Zero();
    delta[k] = step;
    const double plus = weighted_objective(pairs, sigma_tilde, rotation * cayley_to_rotation(delta));
    delta[k] = -step;
    const double minus =
        weighted_objective(pairs, sigma_tilde, rotation * cayley_to_rotation(delta));
    gradient[k] = (plus - minus) / (2.0 * step);
  }
  return gradient;
}

RotationStepResult rotation_step(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation_init,
                                 const SolverConfig& config,
                                 std::vector<double>* accepted_trace);

RotationStepResult rotation_step(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation_init,
                                 const SolverConfig& config) {
  return rotation_step(pairs, sigma_tilde, rotation_init, config, nullptr);
}

RotationStepResult rotation_step(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation_init,
                                 const SolverConfig& config,
                                 std::vector<double>* accepted_trace) {
  for (const double sigma : sigma_tilde) {
    if (!(sigma > 0.0)) fail(ErrorCode::invalid_weight, "weights must be positive");
  }

  constexpr double kGradientStep = 1e-7;
  constexpr double kHessianStep = 1e-4;

  RotationStepResult result;
  result.rotation = rotation_init;
  result.objective = weighted_objective(pairs, sigma_tilde, rotation_init);
  if (accepted_trace) accepted_trace->push_back(result.objective);

  double damping = 1e-6;
  for (int iteration = 0; iteration < config.lm_max_iterations; ++iteration) {
    const Vec3 gradient =
        rotation_objective_gradient(pairs, sigma_tilde, result.rotation, kGradientStep);
    if (gradient.cwiseAbs().maxCoeff() < 1e-15) break;
    const Mat3 hessian =
        numeric_hessian(pairs, sigma_tilde, result.rotation, result.objective, kHessianStep);

    bool accepted = false;
    while (!accepted) {
      const Mat3 damped = hessian + damping * Mat3::Identity();
      const Vec3 delta = damped.ldlt().solve(-gradient);
      if (delta.allFinite() && delta.norm() < 1e-12) return result;  // converged
      if (delta.allFinite()) {
        const Mat3 trial = result.rotation * cayley_to_rotation(delta);
        const double objective = weighted_objective(pairs, sigma_tilde, trial);
        if (objective < result.objective) {
          const double previous = result.objective;
          result.rotation = trial;
          result.objective = objective;
          if (accepted_trace) accepted_trace->push_back(objective);
          damping = std::max(damping * 0.3, kDampingFloor);
          accepted = true;
          if (previous - objective < config.lm_tolerance * std::max(previous, 1e-300)) {
            return result;
          }
          break;
        }
      }
      damping *= 10.0;
      if (damping > kDampingOverflow) {
        result.diverged = true;
        return result;
      }
    }
  }
  return result;
}

void joint_residuals_and_jacobian(std::span<const BearingPair> pairs, const Mat3& rotation,
                                  const SphericalDirection& direction, double c,
                                  Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian) {
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  residuals->resize(n);
  jacobian->resize(n, 5);

  const Vec3 t = spherical_to_unit(direction);
  const double st = std::sin(direction.theta);
  const double ct = std::cos(direction.theta);
  const double sp = std::sin(direction.phi);
  const double cp = std::cos(direction.phi);
  const Vec3 dt_theta(ct * sp, -ct * cp, -st);
  const Vec3 dt_phi(st * cp, st * sp, 0.0);

  for (Eigen::Index i = 0; i < n; ++i) {
    const BearingPair& pair = pairs[i];
    const Vec3 rf = rotation * pair.f_target;
    const Vec3 normal = pair.f_host.cross(rf);
    const double numerator = t.dot(normal);

    const Vec3 a = rotation.transpose() * t.cross(pair.f_host);  // R^T skew(f)^T t
    const Vec3 sigma_a = pair.cov_target * a;
    const double variance = a.dot(sigma_a) + c;
    if (variance < 1e-300) fail(ErrorCode::singularity, "vanishing residual variance");
    const double sigma = std::sqrt(variance);
    (*residuals)(i) = numerator / sigma;

    // Sigma_n t = skew(f) R Sigma a, used by the translation derivatives.
    const Vec3 sigma_n_t = pair.f_host.cross(rotation * sigma_a);

    // Local rotation increments: R(delta) = R cayley(delta), dR/ddelta_k = 2 R e_k^.
    for (int k = 0; k < 3; ++k) {
      const Vec3 ek = Vec3::Unit(k);
      const double d_num = 2.0 * t.dot(pair.f_host.cross(rotation * ek.cross(pair.f_target)));
      const Vec3 da = -2.0 * ek.cross(a);  // (dR)^T skew(f)^T t = -2 e_k x a
      const double d_var = 2.0 * sigma_a.dot(da);
      (*jacobian)(i, k) = d_num / sigma - numerator * d_var / (2.0 * variance * sigma);
    }
    const double d_num_theta = dt_theta.dot(normal);
    const double d_var_theta = 2.0 * dt_theta.dot(sigma_n_t);
    (*jacobian)(i, 3) = d_num_theta / sigma - numerator * d_var_theta / (2.0 * variance * sigma);
    const double d_num_phi = dt_phi.dot(normal);
    const double d_var_phi = 2.0 * dt_phi.dot(sigma_n_t);
    (*jacobian)(i, 4) = d_num_phi / sigma - numerator * d_var_phi / (2.0 * variance * sigma);
  }
}

RelativePose joint_refinement(std::span<const BearingPair> pairs, const SolverConfig& config,
                              const RelativePose& pose_init, EstimateReport* report) {
  if (!(config.regularization > 0.0)) {
    fail(ErrorCode::invalid_argument, "joint refinement requires c > 0");
  }
  const Regularization reg = config.reg();

  Mat3 rotation = pose_init.rotation;
  SphericalDirection direction = unit_to_spherical(pose_init.translation.normalized());
  double energy = pnec_energy(pairs, rotation, spherical_to_unit(direction), reg);

  // Below this floor the energy is numerical noise (noise-free data at the
  // optimum); the pose is a fixed point and no step is accepted.
  if (energy <= 1e-18) {
    if (report) {
      report->refinement_steps_accepted = 0;
      report->refinement_no_progress = false;
    }
    return pose_init;
  }

  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double damping = 1e-6;
  int accepted_steps = 0;

  for (int iteration = 0; iteration < config.lm_max_iterations; ++iteration) {
    joint_residuals_and_jacobian(pairs, rotation, direction, reg.c, &residuals, &jacobian);
    const Eigen::Matrix<double, 5, 5> jtj = jacobian.transpose() * jacobian;
    const Eigen::Matrix<double, 5, 1> gradient = jacobian.transpose() * residuals;
    if (gradient.cwiseAbs().maxCoeff() < 1e-16) break;

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix<double, 5, 5> damped = jtj;
      const double floor = 1e-12 * std::max(jtj.trace() / 5.0, 1e-300);
      damped.diagonal() += damping * (jtj.diagonal().array() + floor).matrix();
      const Eigen::Matrix<double, 5, 1> delta = damped.ldlt().solve(-gradient);
      if (delta.allFinite()) {
        const Mat3 trial_rotation = rotation * cayley_to_rotation(delta.head<3>());
        SphericalDirection trial_direction{direction.theta + delta(3), direction.phi + delta(4)};
        const Vec3 trial_t = spherical_to_unit(trial_direction).normalized();
        const double trial_energy = pnec_energy(pairs, trial_rotation, trial_t, reg);
        if (trial_energy < energy) {
          const double previous = energy;
          rotation = trial_rotation;
          direction = unit_to_spherical(trial_t);
          energy = trial_energy;
          ++accepted_steps;
          if (report) report->energy_trace.push_back(energy);
          damping = std::max(damping * 0.3, kDampingFloor);
          accepted = true;
          if (previous - energy < config.lm_tolerance * std::max(previous, 1e-300)) {
            iteration = config.lm_max_iterations;  // converged
          }
          break;
        }
      }
      damping *= 10.0;
      if (damping > kDampingOverflow) {
        iteration = config.lm_max_iterations;  // stalled
        break;
      }
    }
    if (!accepted) break;
  }

  if (report) {
    report->refinement_steps_accepted = accepted_steps;
    report->refinement_no_progress = (accepted_steps == 0);
  }
  if (accepted_steps == 0) return pose_init;
  return RelativePose{rotation, spherical_to_unit(direction)};
}

Vec3 resolve_translation_sign(std::span<const BearingPair> pairs, const Mat3& rotation,
                              const Vec3& translation) {
  // Least squares depths of d_h f - d_t R f' = t. The host depth is invariant
  // under a sign flip of f' (the ray is treated as a line), so the decision
  // uses the target-frame depth, which is sensitive to the measured ray
  // direction: with correct geometry both depths are positive together.
  std::vector<double> depths;
  depths.reserve(pairs.size());
  for (const BearingPair& pair : pairs) {
    const Vec3 rf = rotation * pair.f_target;
    const double cosine = pair.f_host.dot(rf);
    const double det = 1.0 - cosine * cosine;
    if (det < 1e-12) continue;  // no parallax, depth unobservable
    const double depth_target =
        (cosine * pair.f_host.dot(translation) - rf.dot(translation)) / det;
    depths.push_back(depth_target);
  }
  if (depths.empty()) return translation;
  const std::size_t mid = depths.size() / 2;
  std::nth_element(depths.begin(), depths.begin() + mid, depths.end());
  return depths[mid] < 0.0 ? Vec3(-translation) : translation;
}

EstimateReport pnec_estimate(const CorrespondenceSet& set, const SolverConfig& config,
                             const Mat3& rotation_init, const Vec3& translation_init) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::span<const BearingPair> pairs = set.pairs();
  check_not_degenerate(pairs);
  const Regularization reg = config.reg();

  EstimateReport report;
  Mat3 rotation = rotation_init;
  Vec3 translation = translation_init.normalized();
  std::vector<double> sigma_tilde = unit_weights(pairs.size());

  for (int round = 0; round < config.outer_iterations; ++round) {
    const RotationStepResult step = rotation_step(pairs, sigma_tilde, rotation, config);
    rotation = step.rotation;
    report.rotation_lm_diverged = report.rotation_lm_diverged || step.diverged;

    if (!config.resample_lattice_each_round && round > 0) {
      // One-shot globalization: later rounds run SCF from the previous t.
      PoseCache cache;
      cache.rebuild(pairs, rotation, reg.c);
      translation = scf_iterate(cache, translation, config.scf_iterations);
    } else {
      translation = scf_optimize(pairs, rotation, config);
    }

    if (config.update_weights) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        sigma_tilde[i] = std::sqrt(residual_variance(pairs[i], rotation, translation, reg));
      }
    }
    report.energy_trace.push_back(pnec_energy(pairs, rotation, translation, reg));
    ++report.outer_iterations_used;
  }

  RelativePose pose{rotation, translation};
  if (config.run_joint_refinement) {
    pose = joint_refinement(pairs, config, pose, &report);
  }
  pose.translation = resolve_translation_sign(pairs, pose.rotation, pose.translation);

  report.pose = pose;
  report.final_energy = pnec_energy(pairs, pose.rotation, pose.translation, reg);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EstimateReport nec_estimate(const CorrespondenceSet& set, const SolverConfig& config,
                            const Mat3& rotation_init) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::span<const BearingPair> pairs = set.pairs();
  check_not_degenerate(pairs);

  EstimateReport report;
  const std::vector<double> weights = unit_weights(pairs.size());
  const RotationStepResult step =
      rotation_step(pairs, weights, rotation_init, config, &report.energy_trace);
  report.rotation_lm_diverged = step.diverged;

  const auto [translation, lambda] = nec_translation(pairs, step.rotation);
  report.pose.rotation = step.rotation;
  report.pose.translation = resolve_translation_sign(pairs, step.rotation, translation);
  report.final_energy = lambda;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pnec
