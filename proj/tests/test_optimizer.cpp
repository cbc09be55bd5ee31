#include <doctest.h>

#include <chrono>

#include "pnec/energy.hpp"
#include "pnec/errors.hpp"
#include "pnec/metrics.hpp"
#include "pnec/optimizer.hpp"
#include "pnec/rng.hpp"
#include "pnec/selftest.hpp"
#include "pnec/simulation.hpp"
#include "pnec/sym_eigen.hpp"
#include "test_support.hpp"

using namespace pnec;

namespace {

ProblemInstance make_instance(std::uint64_t seed, double level = 1.0,
                              CameraModel camera = CameraModel::omnidirectional,
                              bool with_translation = true) {
  SceneConfig scene;
  scene.translation_enabled = with_translation;
  NoiseSpec spec;
  spec.type = NoiseType::aniso_inhomo;
  spec.level_px = level;
  return generate_instance(scene, spec, camera, seed);
}

ProblemInstance strong_translation_instance(std::uint64_t start_seed, double level = 0.0) {
  for (std::uint64_t seed = start_seed;; ++seed) {
    ProblemInstance instance = make_instance(seed, level);
    if (instance.has_translation && instance.true_translation_magnitude > 0.5) return instance;
  }
}

}  // namespace

TEST_CASE("fibonacci lattice endpoints and printed recurrence") {
  CHECK_THROWS_AS(fibonacci_lattice(1), Error);

  const std::vector<Vec3> two = fibonacci_lattice(2);
  CHECK(two[0].isApprox(Vec3(0, 1, 0), 1e-15));
  CHECK(two[1].isApprox(Vec3(0, -1, 0), 1e-15));

  const std::vector<Vec3> three = fibonacci_lattice(3);
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  CHECK(three[1].y() == 0.0);
  CHECK(three[1].x() == doctest::Approx(std::cos(golden_angle)).epsilon(1e-15));
  CHECK(three[1].z() == doctest::Approx(std::sin(golden_angle)).epsilon(1e-15));

  for (const Vec3& point : fibonacci_lattice(500)) {
    CHECK(std::abs(point.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("fibonacci lattice K=500 quasi-uniformity (regression constant)") {
  const std::vector<Vec3> lattice = fibonacci_lattice(500);
  double min_angle = kPi;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    for (std::size_t j = i + 1; j < lattice.size(); ++j) {
      const double angle =
          std::acos(std::clamp(lattice[i].dot(lattice[j]), -1.0, 1.0));
      min_angle = std::min(min_angle, angle);
    }
  }
  const double min_deg = min_angle * 180.0 / kPi;
  CHECK(min_deg > 4.0);
  // Brute-force value frozen as a regression constant.
  CHECK(min_deg == doctest::Approx(5.1315376).epsilon(1e-6));
}

TEST_CASE("scf E-matrix algebraic reduction for zero covariance, c = 1") {
  SplitMix64 rng(71);
  std::vector<BearingPair> pairs = test::random_pairs(rng, 8);
  for (BearingPair& pair : pairs) pair.cov_target = Mat3::Zero();
  const Mat3 rotation = test::random_rotation(rng);
  const Vec3 t = rng.unit_vector();

  const Mat3 e = scf_e_matrix(pairs, rotation, t, 1.0);
  Mat3 expected = Mat3::Zero();
  for (const BearingPair& pair : pairs) {
    const Vec3 n = epipolar_normal(pair, rotation);
    const Mat3 a = n * n.transpose();
    expected += a - t.dot(a * t) * Mat3::Identity();
  }
  CHECK((e - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((e - e.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("scf E-matrix single pair identity") {
  SplitMix64 rng(72);
  const std::vector<BearingPair> single = test::random_pairs(rng, 1, 1e-2);
  const Mat3 rotation = test::random_rotation(rng);
  const Vec3 t = rng.unit_vector();
  const double c = 1e-10;

  const Mat3 e = scf_e_matrix(single, rotation, t, c);
  const Vec3 n = epipolar_normal(single[0], rotation);
  const Mat3 a = n * n.transpose();
  const Mat3 b = normal_covariance(single[0], rotation) + c * Mat3::Identity();
  const double beta = t.dot(b * t);
  const Vec3 expected = (beta * (a * t) - t.dot(a * t) * (b * t)) / (beta * beta);
  CHECK((e * t - expected).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, expected.norm()));

  // t^T E t = 0 identically (scale invariance of the energy).
  CHECK(std::abs(t.dot(e * t)) <= 1e-10 * e.cwiseAbs().maxCoeff());
}

TEST_CASE("scf optimize: fixed point, NEC equivalence, lattice dominance") {
  SolverConfig config;

  // Noise-free set with small isotropic covariances recovers t.
  ProblemInstance instance = strong_translation_instance(500);
  std::vector<BearingPair> pairs(instance.pairs.pairs().begin(), instance.pairs.pairs().end());
  for (BearingPair& pair : pairs) pair.cov_target = 1e-6 * Mat3::Identity();
  const Vec3 t = scf_optimize(pairs, instance.true_rotation, config);
  const double angle_deg =
      std::acos(std::clamp(std::abs(t.dot(instance.true_translation_dir)), 0.0, 1.0)) * 180.0 /
      kPi;
  CHECK(angle_deg < 0.1);

  // Zero covariance, c = 1: agrees with the smallest eigenvector of the Gramian.
  SplitMix64 rng(73);
  for (int i = 0; i < 10; ++i) {
    const ProblemInstance noisy = make_instance(1000 + i);
    std::vector<BearingPair> zeroed(noisy.pairs.pairs().begin(), noisy.pairs.pairs().end());
    for (BearingPair& pair : zeroed) pair.cov_target = Mat3::Zero();
    SolverConfig nec_config = config;
    nec_config.regularization = 1.0;
    const Vec3 scf_t = scf_optimize(zeroed, noisy.true_rotation, nec_config);
    const auto [eigvec, lambda] = nec_translation(zeroed, noisy.true_rotation);
    (void)lambda;
    const double separation_deg =
        std::acos(std::clamp(std::abs(scf_t.dot(eigvec)), 0.0, 1.0)) * 180.0 / kPi;
    CHECK(separation_deg < 0.01);
  }

  // Result energy never loses to any lattice sample.
  for (int i = 0; i < 10; ++i) {
    const ProblemInstance noisy = make_instance(2000 + i);
    const Mat3 rotation = test::random_rotation(rng);
    const Vec3 optimized = scf_optimize(noisy.pairs.pairs(), rotation, config);
    const double energy =
        pnec_energy(noisy.pairs.pairs(), rotation, optimized, config.reg());
    for (const Vec3& sample : fibonacci_lattice(config.lattice_points)) {
      CHECK(energy <= pnec_energy(noisy.pairs.pairs(), rotation, sample, config.reg()) + 1e-12);
    }
  }

  // Fixed-point residual at convergence.
  SolverConfig long_config = config;
  long_config.scf_iterations = 50;
  for (int i = 0; i < 10; ++i) {
    const ProblemInstance noisy = make_instance(3000 + i);
    const Vec3 converged = scf_optimize(noisy.pairs.pairs(), noisy.true_rotation, long_config);
    const Mat3 e = scf_e_matrix(noisy.pairs.pairs(), noisy.true_rotation, converged,
                                long_config.regularization);
    CHECK((e * converged - converged.dot(e * converged) * converged).norm() <= 1e-8);
  }
}

TEST_CASE("nec translation") {
  // Diagonal Gramian.
  SplitMix64 rng(74);
  std::vector<BearingPair> pairs = test::random_pairs(rng, 5);
  const auto [lambda_diag, t_diag] = min_eigenpair(Vec3(3, 2, 1).asDiagonal().toDenseMatrix());
  CHECK(lambda_diag == doctest::Approx(1.0));
  CHECK(std::abs(t_diag.z()) == doctest::Approx(1.0));

  // Noise-free rank-deficient Gramian.
  const ProblemInstance instance = strong_translation_instance(600);
  const auto [t, lambda] = nec_translation(instance.pairs.pairs(), instance.true_rotation);
  CHECK(lambda <= 1e-18);
  CHECK(std::min((t - instance.true_translation_dir).norm(),
                 (t + instance.true_translation_dir).norm()) <= 1e-6);

  // Eigenvalue lower-bounds the quadratic form over sampled directions.
  const Mat3 m = gram_matrix(test::random_pairs(rng, 10), test::random_rotation(rng));
  const double lambda_min = min_eigenvalue(m);
  for (const Vec3& sample : fibonacci_lattice(10000)) {
    CHECK(lambda_min <= sample.dot(m * sample) + 1e-9);
  }
}

TEST_CASE("rotation step recovers a noise-free rotation from a 1 degree perturbation") {
  const ProblemInstance instance = strong_translation_instance(700);
  const std::vector<double> ones(instance.pairs.size(), 1.0);
  SplitMix64 rng(75);
  const Mat3 perturbed =
      instance.true_rotation * rotation_from_axis_angle(rng.unit_vector(), kPi / 180.0);

  SolverConfig config;
  const RotationStepResult result =
      rotation_step(instance.pairs.pairs(), ones, perturbed, config);
  CHECK_FALSE(result.diverged);
  CHECK(rotation_error_deg(instance.true_rotation, result.rotation) < 0.01);

  // Unit weights behave as the NEC rotation objective.
  const double initial = min_eigenvalue(gram_matrix(instance.pairs.pairs(), perturbed));
  CHECK(result.objective <= initial + 1e-15);
}

TEST_CASE("pnec estimate: zero noise recovers the pose exactly") {
  const ProblemInstance instance = strong_translation_instance(800);
  SolverConfig config;
  const EstimateReport report = pnec_estimate(instance.pairs, config);
  CHECK(rotation_error_deg(instance.true_rotation, report.pose.rotation) <= 1e-6);
  CHECK(translation_error_deg(instance.true_translation_dir, report.pose.translation) <= 1e-4);
}

TEST_CASE("nec estimate: zero noise recovers the rotation exactly") {
  const ProblemInstance instance = strong_translation_instance(900);
  SolverConfig config;
  const EstimateReport report = nec_estimate(instance.pairs, config);
  CHECK(rotation_error_deg(instance.true_rotation, report.pose.rotation) <= 1e-6);
  CHECK(translation_error_deg(instance.true_translation_dir, report.pose.translation) <= 1e-4);
}

TEST_CASE("flipping all target bearings flips the resolved translation") {
  const ProblemInstance instance = strong_translation_instance(1000);
  SolverConfig config;
  const EstimateReport reference = nec_estimate(instance.pairs, config);

  std::vector<BearingPair> flipped(instance.pairs.pairs().begin(),
                                   instance.pairs.pairs().end());
  // Negating f' leaves the energies invariant (n -> -n) but reverses the
  // cheirality decision.
  for (BearingPair& pair : flipped) pair.f_target = -pair.f_target;
  const EstimateReport negated = nec_estimate(CorrespondenceSet(flipped), config);
  CHECK((reference.pose.translation + negated.pose.translation).norm() <= 1e-6);
}

TEST_CASE("pnec with unit weights and no refinement matches the nec rotation") {
  const ProblemInstance instance = make_instance(4242);
  SolverConfig nec_like;
  nec_like.update_weights = false;
  nec_like.run_joint_refinement = false;
  const EstimateReport pnec_report = pnec_estimate(instance.pairs, nec_like);
  const EstimateReport nec_report = nec_estimate(instance.pairs, SolverConfig{});
  CHECK(rotation_error_deg(nec_report.pose.rotation, pnec_report.pose.rotation) < 0.01);
}

TEST_CASE("alg 1 with zero covariances and c = 1 reproduces the nec estimate") {
  const ProblemInstance instance = make_instance(4343);
  std::vector<BearingPair> zeroed(instance.pairs.pairs().begin(),
                                  instance.pairs.pairs().end());
  for (BearingPair& pair : zeroed) pair.cov_target = Mat3::Zero();
  const CorrespondenceSet set(zeroed);

  SolverConfig config;
  config.regularization = 1.0;
  config.run_joint_refinement = false;
  const EstimateReport pnec_report = pnec_estimate(set, config);
  const EstimateReport nec_report = nec_estimate(set, SolverConfig{});
  CHECK(rotation_error_deg(nec_report.pose.rotation, pnec_report.pose.rotation) < 0.01);
}

TEST_CASE("joint refinement decreases the energy and stays at a noise-free optimum") {
  SolverConfig config;
  const Regularization reg = config.reg();

  // Seeded at the stage-1 output the energy must not increase.
  const ProblemInstance noisy = make_instance(4444);
  SolverConfig stage1 = config;
  stage1.run_joint_refinement = false;
  const EstimateReport first = pnec_estimate(noisy.pairs, stage1);
  const double stage1_energy = pnec_energy(noisy.pairs.pairs(), first.pose.rotation,
                                           first.pose.translation, reg);
  EstimateReport refine_report;
  const RelativePose refined =
      joint_refinement(noisy.pairs.pairs(), config, first.pose, &refine_report);
  const double refined_energy =
      pnec_energy(noisy.pairs.pairs(), refined.rotation, refined.translation, reg);
  CHECK(refined_energy <= stage1_energy + 1e-12);

  // Accepted steps never increase the energy.
  for (std::size_t i = 1; i < refine_report.energy_trace.size(); ++i) {
    CHECK(refine_report.energy_trace[i] <= refine_report.energy_trace[i - 1]);
  }

  // At the noise-free ground truth no step is accepted.
  const ProblemInstance clean = strong_translation_instance(4545);
  EstimateReport clean_report;
  const RelativePose pose{clean.true_rotation, clean.true_translation_dir};
  const RelativePose fixed = joint_refinement(clean.pairs.pairs(), config, pose, &clean_report);
  CHECK(clean_report.refinement_steps_accepted == 0);
  CHECK((fixed.rotation - clean.true_rotation).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("estimates are deterministic") {
  const ProblemInstance instance = make_instance(4646);
  SolverConfig config;
  const EstimateReport first = pnec_estimate(instance.pairs, config);
  const EstimateReport second = pnec_estimate(instance.pairs, config);
  CHECK((first.pose.rotation - second.pose.rotation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((first.pose.translation - second.pose.translation).cwiseAbs().maxCoeff() == 0.0);
  CHECK(first.final_energy == second.final_energy);
  REQUIRE(first.energy_trace.size() == second.energy_trace.size());
  for (std::size_t i = 0; i < first.energy_trace.size(); ++i) {
    CHECK(first.energy_trace[i] == second.energy_trace[i]);
  }
}

TEST_CASE("degenerate configuration is rejected") {
  std::vector<BearingPair> parallel(6);
  SplitMix64 rng(76);
  for (BearingPair& pair : parallel) {
    pair.f_host = Vec3(0, 0, 1);
    pair.f_target = rng.unit_vector();
    pair.cov_target = 1e-6 * Mat3::Identity();
  }
  CHECK_THROWS_AS(pnec_estimate(CorrespondenceSet(parallel), SolverConfig{}), Error);
}

TEST_CASE("pnec wins against nec on most noisy instances and in the mean") {
  SceneConfig scene;
  NoiseSpec spec;
  spec.type = NoiseType::aniso_inhomo;
  spec.level_px = 1.0;
  SolverConfig config;

  int wins = 0;
  double nec_mean = 0.0;
  double pnec_mean = 0.0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const ProblemInstance instance = generate_instance(
        scene, spec, CameraModel::omnidirectional, derive_seed(991, {(std::uint64_t)trial}));
    SplitMix64 init_rng(derive_seed(992, {(std::uint64_t)trial}));
    const Mat3 init =
        instance.true_rotation * rotation_from_axis_angle(init_rng.unit_vector(), 0.02);
    const double nec_error = rotation_error_deg(
        instance.true_rotation, nec_estimate(instance.pairs, config, init).pose.rotation);
    const double pnec_error = rotation_error_deg(
        instance.true_rotation, pnec_estimate(instance.pairs, config, init).pose.rotation);
    if (pnec_error < nec_error) ++wins;
    nec_mean += nec_error;
    pnec_mean += pnec_error;
  }
  CHECK(wins >= 600);
  CHECK(pnec_mean < nec_mean);
}

TEST_CASE("default pnec estimate stays within the runtime budget") {
  const ProblemInstance instance = make_instance(4747);
  SolverConfig config;
  pnec_estimate(instance.pairs, config);  // warm-up
  const auto start = std::chrono::steady_clock::now();
  const EstimateReport report = pnec_estimate(instance.pairs, config);
  const double elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed_ms < 100.0);
  CHECK(report.wall_time_seconds * 1e3 < 100.0);
}
