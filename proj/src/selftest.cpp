#include "pnec/selftest.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "pnec/energy.hpp"
#include "pnec/optimizer.hpp"
#include "pnec/rng.hpp"
#include "pnec/simulation.hpp"
#include "pnec/sym_eigen.hpp"

namespace pnec {
namespace {

std::string format(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// Random correspondence set with no geometric consistency; exercises generic
// Gramians.
std::vector<BearingPair> random_pairs(SplitMix64& rng, int count) {
  std::vector<BearingPair> pairs(count);
  for (BearingPair& pair : pairs) {
    pair.f_host = rng.unit_vector();
    pair.f_target = rng.unit_vector();
    Mat3 a;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
    }
    pair.cov_target = 1e-4 * a * a.transpose();
  }
  return pairs;
}

NoiseSpec default_noise() {
  NoiseSpec spec;
  spec.type = NoiseType::aniso_inhomo;
  spec.level_px = 1.0;
  return spec;
}

}  // namespace

double brute_force_min_quadratic(const Mat3& m, int lattice_points, int descent_steps) {
  const std::vector<Vec3> lattice = fibonacci_lattice(lattice_points);
  Vec3 best = lattice.front();
  double best_value = best.dot(m * best);
  for (const Vec3& t : lattice) {
    const double value = t.dot(m * t);
    if (value < best_value) {
      best_value = value;
      best = t;
    }
  }

  // Projected gradient descent with backtracking from the lattice argmin.
  Vec3 t = best;
  double value = best_value;
  double step = 0.1;
  for (int iteration = 0; iteration < descent_steps; ++iteration) {
    const Vec3 gradient = 2.0 * (m * t);
    const Vec3 tangent = gradient - gradient.dot(t) * t;
    if (tangent.norm() < 1e-16) break;
    bool moved = false;
    while (step > 1e-18) {
      const Vec3 candidate = (t - step * tangent).normalized();
      const double candidate_value = candidate.dot(m * candidate);
      if (candidate_value < value) {
        t = candidate;
        value = candidate_value;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return value;
}

CheckResult check_eigen_oracle(std::uint64_t seed, int sets, int lattice_points,
                               double tolerance) {
  SplitMix64 rng(derive_seed(seed, {0x6569676full}));
  double worst = 0.0;
  double worst_lattice_gap = 0.0;
  int failures = 0;
  for (int i = 0; i < sets; ++i) {
    const std::vector<BearingPair> pairs = random_pairs(rng, 10);
    const Mat3 rotation = rotation_from_axis_angle(rng.unit_vector(), rng.uniform(0.0, kPi));
    const Mat3 gram = gram_matrix(pairs, rotation);

    const auto [t, lambda] = nec_translation(pairs, rotation);
    (void)t;
    const double oracle = brute_force_min_quadratic(gram, lattice_points);
    const double deviation = std::abs(lambda - oracle);
    worst = std::max(worst, deviation);
    if (deviation > tolerance) ++failures;

    // One-sided raw-lattice bound: the eigenvalue can never exceed the best
    // lattice sample.
    const std::vector<Vec3> lattice = fibonacci_lattice(lattice_points);
    double lattice_min = lattice.front().dot(gram * lattice.front());
    for (const Vec3& candidate : lattice) {
      lattice_min = std::min(lattice_min, candidate.dot(gram * candidate));
    }
    if (lambda > lattice_min + tolerance) ++failures;
    worst_lattice_gap = std::max(worst_lattice_gap, lattice_min - lambda);
  }
  CheckResult result;
  result.name = "eigen-oracle";
  result.passed = failures == 0;
  result.details = "max |lambda_min - polished oracle| = " + format(worst) + " (tol " +
                   format(tolerance) + "), max raw lattice overshoot = " +
                   format(worst_lattice_gap) + ", sets = " + std::to_string(sets);
  return result;
}

CheckResult check_scf_fixed_point(std::uint64_t seed, int instances, double tolerance) {
  SplitMix64 rng(derive_seed(seed, {0x736366ull}));
  SceneConfig scene;
  const NoiseSpec spec = default_noise();
  SolverConfig config;
  config.scf_iterations = 50;  // run to convergence

  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < instances; ++i) {
    const ProblemInstance instance =
        generate_instance(scene, spec, CameraModel::omnidirectional, rng.next());
    const Vec3 t =
        scf_optimize(instance.pairs.pairs(), instance.true_rotation, config);
    const Mat3 e = scf_e_matrix(instance.pairs.pairs(), instance.true_rotation, t,
                                config.regularization);
    const double residual = (e * t - t.dot(e * t) * t).norm();
    worst = std::max(worst, residual);
    if (residual > tolerance) ++failures;
  }
  CheckResult result;
  result.name = "scf-fixed-point";
  result.passed = failures == 0;
  result.details = "max |E t - (t^T E t) t| = " + format(worst) + " (tol " + format(tolerance) +
                   "), instances = " + std::to_string(instances);
  return result;
}

CheckResult check_directional_limit(std::uint64_t seed, int tuples, double match_tolerance,
                                    double distinctness_threshold) {
  SplitMix64 rng(derive_seed(seed, {0x6c696d74ull}));
  const Vec3 t(0.0, 0.0, 1.0);
  const double theta = 1e-4;

  double worst_match = 0.0;
  double smallest_separation = 1e300;
  int failures = 0;
  for (int i = 0; i < tuples; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    BearingPair pair;
    pair.f_target = rng.unit_vector();
    Mat3 a;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
    }
    pair.cov_target = a * a.transpose() + 0.1 * Mat3::Identity();
    const Mat3 rotation = rotation_from_axis_angle(rng.unit_vector(), rng.uniform(0.0, kPi));

    // Approach t along the great circle with axis k.
    pair.f_host = spherical_to_unit(SphericalDirection{theta, phi});
    const Vec3 k(std::cos(phi), std::sin(phi), 0.0);

    const double numerator = t.dot(epipolar_normal(pair, rotation));
    const double variance = residual_variance(pair, rotation, t, Regularization{0.0});
    const double finite_theta = numerator * numerator / variance;

    BearingPair limit_pair = pair;
    limit_pair.f_host = t;
    const double limit = directional_limit(k, limit_pair, rotation);
    const double relative = std::abs(finite_theta - limit) / std::max(std::abs(limit), 1e-300);
    worst_match = std::max(worst_match, relative);
    if (relative > match_tolerance) ++failures;

    // A second approach direction must yield a different limit for generic
    // covariance (limit nonexistence witness).
    const double phi2 = phi + 0.5 * kPi;
    const Vec3 k2(std::cos(phi2), std::sin(phi2), 0.0);
    const double limit2 = directional_limit(k2, limit_pair, rotation);
    const double separation = std::abs(limit - limit2) / std::max(std::abs(limit), 1e-300);
    smallest_separation = std::min(smallest_separation, separation);
    if (separation <= distinctness_threshold) ++failures;
  }
  CheckResult result;
  result.name = "directional-limit";
  result.passed = failures == 0;
  result.details = "max relative mismatch at theta=1e-4: " + format(worst_match) + " (tol " +
                   format(match_tolerance) + "), min direction separation: " +
                   format(smallest_separation) + " (min " + format(distinctness_threshold) + ")";
  return result;
}

CheckResult check_gradients(std::uint64_t seed, int configurations, double tolerance) {
  SplitMix64 rng(derive_seed(seed, {0x67726164ull}));
  SceneConfig scene;
  const NoiseSpec spec = default_noise();
  const SolverConfig config;

  double worst_joint = 0.0;
  double worst_rotation = 0.0;
  int checked = 0;
  int failures = 0;
  std::uint64_t instance_counter = 0;
  while (checked < configurations && instance_counter < 10u * configurations) {
    const ProblemInstance instance = generate_instance(
        scene, spec, CameraModel::omnidirectional, derive_seed(seed, {++instance_counter}));
    const std::span<const BearingPair> pairs = instance.pairs.pairs();

    // Random pose near the truth, away from singular directions.
    const Mat3 rotation = instance.true_rotation *
                          rotation_from_axis_angle(rng.unit_vector(), rng.uniform(0.005, 0.05));
    Vec3 translation =
        (instance.true_translation_dir + 0.1 * rng.unit_vector()).normalized();
    bool near_singular = false;
    for (const BearingPair& pair : pairs) {
      if (pair.f_host.cross(translation).norm() < 0.05) near_singular = true;
    }
    if (near_singular) continue;

    // Joint-refinement residual Jacobian vs central differences.
    const SphericalDirection direction = unit_to_spherical(translation);
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    joint_residuals_and_jacobian(pairs, rotation, direction, config.regularization, &residuals,
                                 &jacobian);
    Eigen::MatrixXd fd(jacobian.rows(), 5);
    const double h = 1e-6;
    for (int p = 0; p < 5; ++p) {
      Eigen::VectorXd plus;
      Eigen::VectorXd minus;
      Eigen::MatrixXd scratch;
      Mat3 r_plus = rotation;
      Mat3 r_minus = rotation;
      SphericalDirection d_plus = direction;
      SphericalDirection d_minus = direction;
      if (p < 3) {
        Vec3 delta = Vec3::Zero();
        delta[p] = h;
        r_plus = rotation * cayley_to_rotation(delta);
        r_minus = rotation * cayley_to_rotation(-delta);
      } else if (p == 3) {
        d_plus.theta += h;
        d_minus.theta -= h;
      } else {
        d_plus.phi += h;
        d_minus.phi -= h;
      }
      joint_residuals_and_jacobian(pairs, r_plus, d_plus, config.regularization, &plus, &scratch);
      joint_residuals_and_jacobian(pairs, r_minus, d_minus, config.regularization, &minus,
                                   &scratch);
      fd.col(p) = (plus - minus) / (2.0 * h);
    }
    const double joint_error = (jacobian - fd).norm() / std::max(fd.norm(), 1e-300);
    worst_joint = std::max(worst_joint, joint_error);
    if (joint_error > tolerance) ++failures;

    // Rotation-step objective derivative (step 1e-7) vs central differences
    // with a coarser step; skip eigenvalue-crossing neighborhoods.
    std::vector<double> weights(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      weights[i] = std::sqrt(residual_variance(pairs[i], rotation, translation, config.reg()));
    }
    const Mat3 m_p = weighted_gram(pairs, rotation, weights);
    const SymEigen3 eig = sym_eigen3(m_p);
    if (eig.values[1] - eig.values[0] < 1e-3 * std::max(eig.values[2], 1e-300)) continue;

    const Vec3 lm_gradient = rotation_objective_gradient(pairs, weights, rotation, 1e-7);
    const Vec3 fd_gradient = rotation_objective_gradient(pairs, weights, rotation, 1e-5);
    const double rotation_error =
        (lm_gradient - fd_gradient).norm() / std::max(fd_gradient.norm(), 1e-300);
    worst_rotation = std::max(worst_rotation, rotation_error);
    if (rotation_error > tolerance) ++failures;

    ++checked;
  }
  CheckResult result;
  result.name = "gradient-check";
  result.passed = failures == 0 && checked == configurations;
  result.details = "max joint-Jacobian relative error = " + format(worst_joint) +
                   ", max rotation-gradient relative error = " + format(worst_rotation) +
                   " (tol " + format(tolerance) + "), configurations = " +
                   std::to_string(checked);
  return result;
}

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  std::vector<CheckResult> results;
  results.push_back(check_eigen_oracle(seed, 100, 100000, 1e-6));
  results.push_back(check_scf_fixed_point(seed, 100, 1e-8));
  results.push_back(check_directional_limit(seed, 100, 1e-4, 1e-3));
  results.push_back(check_gradients(seed, 100, 1e-4));
  return results;
}

}  // namespace pnec
