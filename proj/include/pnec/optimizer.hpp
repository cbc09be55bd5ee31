#pragma once

#include <span>
#include <utility>
#include <vector>

#include "pnec/energy.hpp"
#include "pnec/geometry.hpp"

namespace pnec {

struct SolverConfig {
  int outer_iterations = 10;  // alternating rounds before joint refinement
  int scf_iterations = 10;
  int lattice_points = 500;
  double regularization = 1e-10;
  int lm_max_iterations = 50;
  double lm_tolerance = 1e-10;  // relative energy decrease
  double kappa = 1.0;           // unscented transform spread
  bool update_weights = true;   // reweighting between rounds
  bool run_joint_refinement = true;
  bool resample_lattice_each_round = true;

  void validate() const;
  Regularization reg() const { return Regularization{regularization}; }
};

struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3(0.0, 0.0, 1.0);  // unit length
};

struct EstimateReport {
  RelativePose pose;
  double final_energy = 0.0;
  /// Stage-1 energies (one per alternating round), then the energy after each
  /// accepted joint-refinement step.
  std::vector<double> energy_trace;
  int outer_iterations_used = 0;
  int refinement_steps_accepted = 0;
  bool rotation_lm_diverged = false;
  bool refinement_no_progress = false;
  double wall_time_seconds = 0.0;
};

/// Evenly distributed points on the unit sphere via the golden-ratio spiral:
/// phi = pi (3 - sqrt(5)), y_k = 1 - 2 (k-1)/(K-1), x/z at angle (k-1) phi.
std::vector<Vec3> fibonacci_lattice(int count);

/// SCF iteration matrix E = sum_i w_i (t^T B_i t A_i - t^T A_i t B_i) with
/// A_i = n_i n_i^T, B_i = skew(f_i) R Sigma_i R^T skew(f_i)^T + c I and
/// scaled weights w_i = (t^T B_i t)^-2.
Mat3 scf_e_matrix(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const Vec3& translation, double c);

/// Translation stage: evaluate the energy on the Fibonacci lattice, start at
/// the argmin, then run SCF fixed-point steps; returns the best iterate.
Vec3 scf_optimize(std::span<const BearingPair> pairs, const Mat3& rotation,
                  const SolverConfig& config);

/// NEC translation: smallest eigenpair of the Gramian, (eigenvector, lambda).
std::pair<Vec3, double> nec_translation(std::span<const BearingPair> pairs,
                                        const Mat3& rotation);

struct RotationStepResult {
  Mat3 rotation = Mat3::Identity();
  double objective = 0.0;  // lambda_min of the weighted Gramian at `rotation`
  bool diverged = false;
};

/// Damped (Levenberg-Marquardt style) minimization of
/// lambda_min(M_P(R; sigma_tilde)) over local Cayley increments, seeded at
/// rotation_init. Numeric derivatives with step 1e-7.
RotationStepResult rotation_step(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation_init,
                                 const SolverConfig& config);

/// Gradient of lambda_min(M_P(R cayley(delta))) at delta = 0, using central
/// differences with the given step. Exposed for derivative checks.
Vec3 rotation_objective_gradient(std::span<const BearingPair> pairs,
                                 std::span<const double> sigma_tilde, const Mat3& rotation,
                                 double step);

/// Residuals r_i = t^T n_i / sigma'_i and their analytic Jacobian with
/// respect to (3 local Cayley increments on R, theta, phi). Exposed for
/// derivative checks against finite differences.
void joint_residuals_and_jacobian(std::span<const BearingPair> pairs, const Mat3& rotation,
                                  const SphericalDirection& direction, double c,
                                  Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian);

/// Second stage: LM over SO(3) x S^2 (local Cayley increments + spherical
/// angles) minimizing the regularized PNEC energy. Accepted steps strictly
/// decrease the energy; returns the initial pose when no step is accepted.
RelativePose joint_refinement(std::span<const BearingPair> pairs, const SolverConfig& config,
                              const RelativePose& pose_init, EstimateReport* report = nullptr);

/// Full PNEC pipeline: alternating weighted-eigenvalue rotation steps and SCF
/// translation steps with reweighting, then joint refinement. The translation
/// sign is resolved by cheirality (median triangulated host depth positive).
EstimateReport pnec_estimate(const CorrespondenceSet& set, const SolverConfig& config,
                             const Mat3& rotation_init = Mat3::Identity(),
                             const Vec3& translation_init = Vec3(0.0, 0.0, 1.0));

/// NEC baseline: LM on lambda_min(M(R)), translation from the eigenvector.
EstimateReport nec_estimate(const CorrespondenceSet& set, const SolverConfig& config,
                            const Mat3& rotation_init = Mat3::Identity());

/// Flip the translation sign if the median triangulated depth in the host
/// frame is negative. Returns the (possibly flipped) translation.
Vec3 resolve_translation_sign(std::span<const BearingPair> pairs, const Mat3& rotation,
                              const Vec3& translation);

}  // namespace pnec
