#include "pnec/sym_eigen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace pnec {
namespace {

// Eigenvalues of a symmetric 3x3 matrix in ascending order via the
// trigonometric solution of the characteristic polynomial.
Vec3 closed_form_eigenvalues(const Mat3& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  if (p1 == 0.0) {
    Vec3 diag(a(0, 0), a(1, 1), a(2, 2));
    std::sort(diag.data(), diag.data() + 3);
    return diag;
  }
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Mat3 b = (a - q * Mat3::Identity()) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double largest = q + 2.0 * p * std::cos(phi);
  const double smallest = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
  return Vec3(smallest, 3.0 * q - largest - smallest, largest);
}

// Unit eigenvector for eigenvalue lambda via the largest cross product of two
// rows of (A - lambda I). Returns false when all candidates are tiny, which
// happens near repeated eigenvalues.
bool eigenvector_for(const Mat3& a, double lambda, double scale, Vec3* out) {
  const Mat3 m = a - lambda * Mat3::Identity();
  const Vec3 c01 = m.row(0).cross(m.row(1));
  const Vec3 c02 = m.row(0).cross(m.row(2));
  const Vec3 c12 = m.row(1).cross(m.row(2));
  const double n01 = c01.squaredNorm();
  const double n02 = c02.squaredNorm();
  const double n12 = c12.squaredNorm();
  Vec3 best = c01;
  double best_norm = n01;
  if (n02 > best_norm) {
    best = c02;
    best_norm = n02;
  }
  if (n12 > best_norm) {
    best = c12;
    best_norm = n12;
  }
  if (best_norm <= 1e-24 * scale * scale * scale * scale) return false;
  *out = best / std::sqrt(best_norm);
  return true;
}

void fix_sign(Vec3* v) {
  int max_index = 0;
  (*v).cwiseAbs().maxCoeff(&max_index);
  if ((*v)(max_index) < 0.0) *v = -(*v);
}

SymEigen3 fallback(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(a);
  SymEigen3 result;
  result.values = solver.eigenvalues();
  result.vectors = solver.eigenvectors();
  for (int k = 0; k < 3; ++k) {
    Vec3 column = result.vectors.col(k);
    fix_sign(&column);
    result.vectors.col(k) = column;
  }
  return result;
}

}  // namespace

SymEigen3 sym_eigen3(const Mat3& matrix) {
  const Mat3 a = 0.5 * (matrix + matrix.transpose());
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);

  const Vec3 values = closed_form_eigenvalues(a);
  SymEigen3 result;
  result.values = values;

  // Repeated eigenvalues: the cross-product construction degrades, use the
  // iterative path directly.
  const double gap_low = values[1] - values[0];
  const double gap_high = values[2] - values[1];
  if (gap_low <= 1e-8 * scale || gap_high <= 1e-8 * scale) return fallback(a);

  for (int k = 0; k < 3; ++k) {
    Vec3 v;
    if (!eigenvector_for(a, values[k], scale, &v)) return fallback(a);
    const double residual = (a * v - values[k] * v).cwiseAbs().maxCoeff();
    if (residual > 1e-9 * scale) return fallback(a);
    fix_sign(&v);
    result.vectors.col(k) = v;
  }
  return result;
}

double min_eigenvalue(const Mat3& matrix) {
  const Mat3 a = 0.5 * (matrix + matrix.transpose());
  return closed_form_eigenvalues(a)[0];
}

std::pair<double, Vec3> min_eigenpair(const Mat3& matrix) {
  const Mat3 a = 0.5 * (matrix + matrix.transpose());
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const Vec3 values = closed_form_eigenvalues(a);

  Vec3 v;
  if (values[1] - values[0] > 1e-8 * scale && eigenvector_for(a, values[0], scale, &v)) {
    const double residual = (a * v - values[0] * v).cwiseAbs().maxCoeff();
    if (residual <= 1e-9 * scale) {
      fix_sign(&v);
      return {values[0], v};
    }
  }
  const SymEigen3 full = fallback(a);
  return {full.values[0], full.vectors.col(0)};
}

}  // namespace pnec
