#include "pnec/klt.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pnec/errors.hpp"
#include "pnec/sym_eigen.hpp"

namespace pnec {

Patch::Patch(int width, int height, std::vector<double> intensity)
    : width_(width), height_(height), intensity_(std::move(intensity)) {
  if (width_ < 3 || height_ < 3) {
    fail(ErrorCode::invalid_argument, "patch must be at least 3x3");
  }
  if (intensity_.size() != static_cast<std::size_t>(width_) * height_) {
    fail(ErrorCode::invalid_argument, "intensity size does not match patch dimensions");
  }
  for (const double v : intensity_) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "patch intensities must be finite");
  }
  gradient_.assign(intensity_.size(), Vec2::Zero());
  for (int y = 1; y + 1 < height_; ++y) {
    for (int x = 1; x + 1 < width_; ++x) {
      gradient_[index(x, y)] =
          Vec2(0.5 * (intensity_at(x + 1, y) - intensity_at(x - 1, y)),
               0.5 * (intensity_at(x, y + 1) - intensity_at(x, y - 1)));
    }
  }
}

namespace {

template <typename Field>
typename Field::value_type bilinear(const Field& field, int width, int height, double x,
                                    double y) {
  if (x < 0.0 || y < 0.0 || x > width - 1.0 || y > height - 1.0) {
    fail(ErrorCode::out_of_bounds, "sample position outside patch");
  }
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  if (x0 == width - 1) --x0;
  if (y0 == height - 1) --y0;
  const double fx = x - x0;
  const double fy = y - y0;
  const auto at = [&](int xi, int yi) {
    return field[static_cast<std::size_t>(yi) * width + xi];
  };
  typename Field::value_type value = (1.0 - fx) * (1.0 - fy) * at(x0, y0);
  value += fx * (1.0 - fy) * at(x0 + 1, y0);
  value += (1.0 - fx) * fy * at(x0, y0 + 1);
  value += fx * fy * at(x0 + 1, y0 + 1);
  return value;
}

}  // namespace

double Patch::sample(double x, double y) const {
  return bilinear(intensity_, width_, height_, x, y);
}

Vec2 Patch::gradient_at(int x, int y) const { return gradient_[index(x, y)]; }

Vec2 Patch::sample_gradient(double x, double y) const {
  return bilinear(gradient_, width_, height_, x, y);
}

Patch Patch::from_pgm(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) fail(ErrorCode::io_error, "cannot open " + path.string());

  const auto next_token = [&stream, &path]() -> std::string {
    std::string token;
    while (stream >> token) {
      if (token[0] == '#') {
        std::string rest;
        std::getline(stream, rest);
        continue;
      }
      return token;
    }
    fail(ErrorCode::io_error, "truncated PGM header in " + path.string());
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") {
    fail(ErrorCode::io_error, "not a PGM file: " + path.string());
  }
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    fail(ErrorCode::io_error, "invalid PGM dimensions in " + path.string());
  }

  std::vector<double> intensity;
  intensity.reserve(static_cast<std::size_t>(width) * height);
  if (magic == "P2") {
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
      intensity.push_back(std::stod(next_token()));
    }
  } else {
    stream.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
      int value = stream.get();
      if (bytes == 2) value = value * 256 + stream.get();
      if (!stream) fail(ErrorCode::io_error, "truncated PGM payload in " + path.string());
      intensity.push_back(static_cast<double>(value));
    }
  }
  return Patch(width, height, std::move(intensity));
}

Pattern Pattern::dense52() {
  Pattern pattern;
  for (double y = -3.5; y <= 3.5; y += 1.0) {
    for (double x = -3.5; x <= 3.5; x += 1.0) {
      // Drop the three cells in each 8x8 corner.
      if (std::abs(x) == 3.5 && std::abs(y) == 3.5) continue;
      if ((std::abs(x) == 3.5 && std::abs(y) == 2.5) ||
          (std::abs(x) == 2.5 && std::abs(y) == 3.5)) {
        continue;
      }
      pattern.offsets.emplace_back(x, y);
    }
  }
  return pattern;
}

Vec2 Se2Transform::apply(const Vec2& p) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Vec2(c * p.x() - s * p.y() + u, s * p.x() + c * p.y() + v);
}

double klt_energy(const Patch& host, const Patch& target, const Se2Transform& transform,
                  const Pattern& pattern) {
  if (pattern.offsets.size() < 3) {
    fail(ErrorCode::invalid_argument, "pattern needs at least three offsets");
  }
  const Vec2 host_center = host.center();
  const Vec2 target_center = target.center();

  double host_mean = 0.0;
  double target_mean = 0.0;
  std::vector<double> host_values(pattern.offsets.size());
  std::vector<double> target_values(pattern.offsets.size());
  for (std::size_t i = 0; i < pattern.offsets.size(); ++i) {
    const Vec2 hp = host_center + pattern.offsets[i];
    const Vec2 tp = target_center + transform.apply(pattern.offsets[i]);
    host_values[i] = host.sample(hp.x(), hp.y());
    target_values[i] = target.sample(tp.x(), tp.y());
    host_mean += host_values[i];
    target_mean += target_values[i];
  }
  host_mean /= static_cast<double>(pattern.offsets.size());
  target_mean /= static_cast<double>(pattern.offsets.size());
  if (std::abs(host_mean) < 1e-300 || std::abs(target_mean) < 1e-300) {
    fail(ErrorCode::numeric_failure, "pattern mean intensity vanished");
  }

  double energy = 0.0;
  for (std::size_t i = 0; i < pattern.offsets.size(); ++i) {
    const double d = host_values[i] / host_mean - target_values[i] / target_mean;
    energy += d * d;
  }
  return energy;
}

Se2Covariance se2_covariance(const Patch& host, const Pattern& pattern) {
  const std::size_t count = pattern.offsets.size();
  if (count < 3) fail(ErrorCode::invalid_argument, "pattern needs at least three offsets");
  const Vec2 center = host.center();

  // Intensities and gradient rows grad^T * J_xi at every pattern point.
  std::vector<double> values(count);
  std::vector<Eigen::RowVector3d> rows(count);
  double intensity_sum = 0.0;
  Eigen::RowVector3d row_sum = Eigen::RowVector3d::Zero();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 p = pattern.offsets[i];
    const Vec2 sample_pos = center + p;
    values[i] = host.sample(sample_pos.x(), sample_pos.y());
    const Vec2 g = host.sample_gradient(sample_pos.x(), sample_pos.y());
    Eigen::Matrix<double, 2, 3> j_xi;
    j_xi << 1.0, 0.0, -p.y(),  //
        0.0, 1.0, p.x();
    rows[i] = g.transpose() * j_xi;
    intensity_sum += values[i];
    row_sum += rows[i];
  }
  if (std::abs(intensity_sum) < 1e-300) {
    fail(ErrorCode::degenerate_patch, "pattern intensity sum vanished");
  }

  const double scale = static_cast<double>(count) / (intensity_sum * intensity_sum);
  Mat3 hessian = Mat3::Zero();
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::RowVector3d j = scale * (rows[i] * intensity_sum - values[i] * row_sum);
    hessian += j.transpose() * j;
  }
  hessian = 0.5 * (hessian + hessian.transpose()).eval();

  const SymEigen3 eig = sym_eigen3(hessian);
  const double lambda_max = eig.values[2];
  if (lambda_max <= 1e-300) {
    fail(ErrorCode::degenerate_patch, "constant patch: all KLT Jacobians vanish");
  }

  Se2Covariance result;
  if (eig.values[0] <= 1e-12 * lambda_max) {
    const double damping = 1e-8 * hessian.trace() / 3.0;
    result.matrix = (hessian + damping * Mat3::Identity()).inverse();
    result.damped = true;
  } else {
    result.matrix = hessian.inverse();
  }
  result.matrix = 0.5 * (result.matrix + result.matrix.transpose()).eval();
  return result;
}

Mat2 position_covariance_in_target(const Se2Covariance& se2, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r * se2.matrix.topLeftCorner<2, 2>() * r.transpose();
}

}  // namespace pnec
