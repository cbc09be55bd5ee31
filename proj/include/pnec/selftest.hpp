#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnec/geometry.hpp"

namespace pnec {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string details;
};

/// Derivative-free minimum of t^T M t over the unit sphere: argmin over a
/// Fibonacci lattice followed by projected gradient descent with backtracking.
/// Independent of the closed-form eigen-decomposition, usable as its oracle.
double brute_force_min_quadratic(const Mat3& m, int lattice_points, int descent_steps = 200);

/// Eigen-oracle: nec_translation's lambda_min against the brute-force
/// minimum on random correspondence sets.
CheckResult check_eigen_oracle(std::uint64_t seed, int sets, int lattice_points,
                               double tolerance);

/// SCF fixed point: residual |E t - (t^T E t) t| at convergence.
CheckResult check_scf_fixed_point(std::uint64_t seed, int instances, double tolerance);

/// Directional limit: finite-theta residual against the closed form, and
/// direction dependence of the limit.
CheckResult check_directional_limit(std::uint64_t seed, int tuples, double match_tolerance,
                                    double distinctness_threshold);

/// Analytic joint-refinement Jacobians and the rotation-step numeric gradient
/// against central finite differences.
CheckResult check_gradients(std::uint64_t seed, int configurations, double tolerance);

/// The four suites with the counts used by the CLI selftest command.
std::vector<CheckResult> run_selftest(std::uint64_t seed);

}  // namespace pnec
