#pragma once

#include <utility>

#include "pnec/geometry.hpp"

namespace pnec {

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues ascending.
/// Column k of `vectors` belongs to values[k].
struct SymEigen3 {
  Vec3 values;
  Mat3 vectors;
};

/// Closed-form (trigonometric characteristic polynomial) decomposition with a
/// deterministic iterative fallback when the closed-form residual exceeds
/// 1e-9 relative to the matrix scale.
SymEigen3 sym_eigen3(const Mat3& matrix);

/// Smallest eigenvalue only (no eigenvector computation).
double min_eigenvalue(const Mat3& matrix);

/// Smallest eigenvalue and a unit eigenvector. Sign convention: the component
/// with the largest magnitude is nonnegative.
std::pair<double, Vec3> min_eigenpair(const Mat3& matrix);

}  // namespace pnec
