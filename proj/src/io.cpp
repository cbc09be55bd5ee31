#include "pnec/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pnec/errors.hpp"
#include "pnec/sym_eigen.hpp"

namespace pnec {

CorrespondenceSet read_correspondences(const std::filesystem::path& path,
                                       const std::function<void(const std::string&)>& warn) {
  std::ifstream stream(path);
  if (!stream) fail(ErrorCode::io_error, "cannot open " + path.string());

  std::vector<BearingPair> pairs;
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    std::vector<double> values;
    double value = 0.0;
    while (fields >> value) values.push_back(value);
    if (values.empty()) continue;
    if (values.size() != 15) {
      fail(ErrorCode::io_error, path.string() + ":" + std::to_string(line_number) +
                                    ": expected 15 values, got " + std::to_string(values.size()));
    }
    BearingPair pair;
    pair.f_host = Vec3(values[0], values[1], values[2]);
    pair.f_target = Vec3(values[3], values[4], values[5]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) pair.cov_target(r, c) = values[6 + 3 * r + c];
    }
    for (const Vec3& bearing : {pair.f_host, pair.f_target}) {
      if (bearing.norm() < 1e-12) {
        fail(ErrorCode::io_error,
             path.string() + ":" + std::to_string(line_number) + ": zero bearing vector");
      }
      if (std::abs(bearing.norm() - 1.0) > 1e-6 && warn) {
        warn(path.string() + ":" + std::to_string(line_number) +
             ": bearing deviates from unit norm by " + std::to_string(bearing.norm() - 1.0) +
             ", normalizing");
      }
    }
    pair.cov_target = 0.5 * (pair.cov_target + pair.cov_target.transpose()).eval();
    if (min_eigenvalue(pair.cov_target) < -1e-12) {
      fail(ErrorCode::io_error,
           path.string() + ":" + std::to_string(line_number) + ": covariance is not PSD");
    }
    pairs.push_back(pair);
  }
  if (pairs.size() < 5) {
    fail(ErrorCode::degenerate_input, path.string() + ": fewer than 5 correspondences");
  }
  return CorrespondenceSet(std::move(pairs));
}

void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& set) {
  std::ofstream stream(path);
  if (!stream) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  stream << "# f_host(3) f_target(3) cov_target(9, row-major)\n";
  char buffer[32];
  const auto append = [&](double v, char sep) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    stream << buffer << sep;
  };
  for (const BearingPair& pair : set.pairs()) {
    for (int i = 0; i < 3; ++i) append(pair.f_host[i], ' ');
    for (int i = 0; i < 3; ++i) append(pair.f_target[i], ' ');
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        append(pair.cov_target(r, c), (r == 2 && c == 2) ? '\n' : ' ');
      }
    }
  }
}

namespace {

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

std::string cell_label(const SweepCell& cell) {
  if (cell.fixed_beta) return "beta " + format_double(*cell.fixed_beta);
  if (cell.offset_fraction > 0.0) return "offset " + format_double(cell.offset_fraction);
  return format_double(cell.noise.level_px) + " px";
}

}  // namespace

std::string results_to_csv(const std::vector<CellResult>& results) {
  std::ostringstream out;
  out << "camera,translation,noise_type,level_px,fixed_beta,offset_fraction,estimator,trials,"
         "failures,mean_erot_deg,std_erot_deg,mean_et_deg,std_et_deg,median_energy,"
         "mean_wall_ms\n";
  for (const CellResult& result : results) {
    const SweepCell& cell = result.cell;
    const CellStats& stats = result.stats;
    out << to_string(cell.camera) << ',' << (cell.with_translation ? "with" : "without") << ','
        << to_string(cell.noise.type) << ',' << format_double(cell.noise.level_px) << ','
        << (cell.fixed_beta ? format_double(*cell.fixed_beta) : std::string()) << ','
        << format_double(cell.offset_fraction) << ',' << to_string(result.estimator) << ','
        << stats.trials << ',' << stats.failures << ',' << format_double(stats.mean_erot_deg)
        << ',' << format_double(stats.std_erot_deg) << ','
        << (stats.et_defined ? format_double(stats.mean_et_deg) : std::string()) << ','
        << (stats.et_defined ? format_double(stats.std_et_deg) : std::string()) << ','
        << format_double(stats.median_energy) << ',' << format_double(stats.mean_wall_ms)
        << '\n';
  }
  return out.str();
}

std::string results_to_markdown(const std::vector<CellResult>& results) {
  // Group rows by (camera, translation); columns follow cell order.
  std::map<std::pair<std::string, bool>, std::vector<const CellResult*>> groups;
  for (const CellResult& result : results) {
    groups[{to_string(result.cell.camera), result.cell.with_translation}].push_back(&result);
  }

  std::ostringstream out;
  for (const auto& [key, rows] : groups) {
    out << "### " << key.first << (key.second ? " (with translation)" : " (without translation)")
        << "\n\n";

    std::vector<std::pair<std::size_t, std::string>> cells;  // cell_index -> label
    std::vector<std::string> estimators;
    for (const CellResult* row : rows) {
      const std::string label = cell_label(row->cell);
      if (std::find_if(cells.begin(), cells.end(), [&](const auto& c) {
            return c.first == row->cell_index;
          }) == cells.end()) {
        cells.emplace_back(row->cell_index, label);
      }
      const std::string estimator = to_string(row->estimator);
      if (std::find(estimators.begin(), estimators.end(), estimator) == estimators.end()) {
        estimators.push_back(estimator);
      }
    }

    out << "| metric |";
    for (const auto& [index, label] : cells) out << ' ' << label << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cells.size(); ++i) out << "---|";
    out << '\n';

    for (const std::string& estimator : estimators) {
      out << "| " << estimator << " e_rot [deg] |";
      for (const auto& [index, label] : cells) {
        for (const CellResult* row : rows) {
          if (row->cell_index == index && to_string(row->estimator) == estimator) {
            out << ' ' << format_double(row->stats.mean_erot_deg) << " |";
          }
        }
      }
      out << '\n';
      const bool any_et = std::any_of(rows.begin(), rows.end(), [&](const CellResult* row) {
        return to_string(row->estimator) == estimator && row->stats.et_defined;
      });
      if (any_et) {
        out << "| " << estimator << " e_t [deg] |";
        for (const auto& [index, label] : cells) {
          for (const CellResult* row : rows) {
            if (row->cell_index == index && to_string(row->estimator) == estimator) {
              out << ' '
                  << (row->stats.et_defined ? format_double(row->stats.mean_et_deg)
                                            : std::string("-"))
                  << " |";
            }
          }
        }
        out << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  stream << content;
}

}  // namespace pnec
