#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnec/experiment.hpp"
#include "pnec/optimizer.hpp"
#include "pnec/simulation.hpp"

namespace pnec {

enum class Command {
  run_synthetic,
  sweep_noise,
  sweep_anisotropy,
  sweep_offset,
  estimate_file,
  selftest,
};

const char* to_string(Command command);
Command command_from_string(const std::string& name);

enum class OutputFormat { csv, markdown };

struct RunConfig {
  std::optional<Command> command;
  SolverConfig solver;
  SceneConfig scene;
  NoiseSpec noise;  // type and level for single-cell runs
  std::vector<double> noise_levels = {0.5, 1.0, 1.5};
  std::vector<double> anisotropy_grid = {0.5, 0.625, 0.75, 0.875, 1.0};
  std::vector<double> offset_grid = {0.0, 0.125, 0.25, 0.375, 0.5};
  CameraModel camera = CameraModel::omnidirectional;
  bool with_translation = true;
  int trials = 1000;
  std::uint64_t master_seed = 1;
  double rotation_init_perturbation_rad = 0.02;
  std::string output_path = "results";
  OutputFormat output_format = OutputFormat::csv;
  int parallelism = 1;
  EstimatorKind estimator = EstimatorKind::pnec;  // estimate-file
  std::string input_path;

  /// Sweep cells implied by the command.
  std::vector<SweepCell> cells() const;
  ExperimentConfig experiment() const;
};

/// Merge defaults <- file <- overrides (both JSON objects with the same
/// schema). Unknown keys, type mismatches and out-of-range values raise
/// config-error with the offending key path.
RunConfig parse_config(const nlohmann::json& file, const nlohmann::json& overrides);

/// Full echo of a RunConfig, sufficient to rerun it.
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace pnec
