#include "pnec/config.hpp"

#include "pnec/errors.hpp"

namespace pnec {

const char* to_string(Command command) {
  switch (command) {
    case Command::run_synthetic: return "run-synthetic";
    case Command::sweep_noise: return "sweep-noise";
    case Command::sweep_anisotropy: return "sweep-anisotropy";
    case Command::sweep_offset: return "sweep-offset";
    case Command::estimate_file: return "estimate-file";
    case Command::selftest: return "selftest";
  }
  return "unknown";
}

Command command_from_string(const std::string& name) {
  for (const Command command :
       {Command::run_synthetic, Command::sweep_noise, Command::sweep_anisotropy,
        Command::sweep_offset, Command::estimate_file, Command::selftest}) {
    if (name == to_string(command)) return command;
  }
  fail(ErrorCode::config_error, "unknown command '" + name + "'");
}

std::vector<SweepCell> RunConfig::cells() const {
  std::vector<SweepCell> cells;
  const auto base_cell = [&]() {
    SweepCell cell;
    cell.camera = camera;
    cell.with_translation = with_translation;
    cell.noise = noise;
    return cell;
  };
  switch (command.value_or(Command::run_synthetic)) {
    case Command::run_synthetic: {
      cells.push_back(base_cell());
      break;
    }
    case Command::sweep_noise: {
      for (const double level : noise_levels) {
        SweepCell cell = base_cell();
        cell.noise.level_px = level;
        cells.push_back(cell);
      }
      break;
    }
    case Command::sweep_anisotropy: {
      for (const double beta : anisotropy_grid) {
        SweepCell cell = base_cell();
        cell.fixed_beta = beta;
        cells.push_back(cell);
      }
      break;
    }
    case Command::sweep_offset: {
      for (const double offset : offset_grid) {
        SweepCell cell = base_cell();
        cell.offset_fraction = offset;
        cells.push_back(cell);
      }
      break;
    }
    default:
      fail(ErrorCode::config_error, "command does not define a sweep");
  }
  return cells;
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig config;
  config.scene = scene;
  config.solver = solver;
  config.cells = cells();
  config.trials = trials;
  config.parallelism = parallelism;
  config.master_seed = master_seed;
  config.rotation_init_perturbation_rad = rotation_init_perturbation_rad;
  return config;
}

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& message) {
  fail(ErrorCode::config_error, path + ": " + message);
}

double get_number(const json& value, const std::string& path) {
  if (!value.is_number()) config_fail(path, "expected a number");
  return value.get<double>();
}

int get_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) config_fail(path, "expected an integer");
  return value.get<int>();
}

bool get_bool(const json& value, const std::string& path) {
  if (!value.is_boolean()) config_fail(path, "expected a boolean");
  return value.get<bool>();
}

std::string get_string(const json& value, const std::string& path) {
  if (!value.is_string()) config_fail(path, "expected a string");
  return value.get<std::string>();
}

std::vector<double> get_number_list(const json& value, const std::string& path) {
  if (!value.is_array()) config_fail(path, "expected an array of numbers");
  std::vector<double> numbers;
  for (const auto& item : value) {
    if (!item.is_number()) config_fail(path, "expected an array of numbers");
    numbers.push_back(item.get<double>());
  }
  return numbers;
}

void apply_solver(const json& object, const std::string& prefix, SolverConfig* solver) {
  for (const auto& [key, value] : object.items()) {
    const std::string path = prefix + "." + key;
    if (key == "outer_iterations") {
      solver->outer_iterations = get_int(value, path);
    } else if (key == "scf_iterations") {
      solver->scf_iterations = get_int(value, path);
    } else if (key == "lattice_points") {
      solver->lattice_points = get_int(value, path);
    } else if (key == "regularization") {
      solver->regularization = get_number(value, path);
    } else if (key == "lm_max_iterations") {
      solver->lm_max_iterations = get_int(value, path);
    } else if (key == "lm_tolerance") {
      solver->lm_tolerance = get_number(value, path);
    } else if (key == "kappa") {
      solver->kappa = get_number(value, path);
    } else if (key == "update_weights") {
      solver->update_weights = get_bool(value, path);
    } else if (key == "run_joint_refinement") {
      solver->run_joint_refinement = get_bool(value, path);
    } else if (key == "resample_lattice_each_round") {
      solver->resample_lattice_each_round = get_bool(value, path);
    } else {
      config_fail(path, "unknown key");
    }
  }
}

void apply_scene(const json& object, const std::string& prefix, SceneConfig* scene) {
  for (const auto& [key, value] : object.items()) {
    const std::string path = prefix + "." + key;
    if (key == "n_points") {
      scene->n_points = get_int(value, path);
    } else if (key == "depth_range") {
      const auto range = get_number_list(value, path);
      if (range.size() != 2) config_fail(path, "expected [min, max]");
      scene->depth_min = range[0];
      scene->depth_max = range[1];
    } else if (key == "max_bearing_angle") {
      scene->max_bearing_angle_rad = get_number(value, path);
    } else if (key == "max_rotation") {
      scene->max_rotation = get_number(value, path);
    } else if (key == "max_translation") {
      scene->max_translation = get_number(value, path);
    } else if (key == "focal_px") {
      scene->focal_px = get_number(value, path);
    } else if (key == "image_width") {
      scene->image_width = get_int(value, path);
    } else if (key == "image_height") {
      scene->image_height = get_int(value, path);
    } else {
      config_fail(path, "unknown key");
    }
  }
}

void apply_noise(const json& object, const std::string& prefix, NoiseSpec* noise) {
  for (const auto& [key, value] : object.items()) {
    const std::string path = prefix + "." + key;
    if (key == "type") {
      noise->type = noise_type_from_string(get_string(value, path));
    } else if (key == "level") {
      noise->level_px = get_number(value, path);
      if (!(noise->level_px > 0.0)) config_fail(path, "noise level must be > 0");
    } else if (key == "s_range") {
      const auto range = get_number_list(value, path);
      if (range.size() != 2) config_fail(path, "expected [min, max]");
      noise->s_range = {range[0], range[1]};
    } else if (key == "beta_range") {
      const auto range = get_number_list(value, path);
      if (range.size() != 2) config_fail(path, "expected [min, max]");
      noise->beta_range = {range[0], range[1]};
    } else if (key == "alpha_range") {
      const auto range = get_number_list(value, path);
      if (range.size() != 2) config_fail(path, "expected [min, max]");
      noise->alpha_range = {range[0], range[1]};
    } else {
      config_fail(path, "unknown key");
    }
  }
}

void apply_object(const json& object, RunConfig* config) {
  if (!object.is_object()) fail(ErrorCode::config_error, "config root must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (key == "command") {
      config->command = command_from_string(get_string(value, key));
    } else if (key == "solver") {
      if (!value.is_object()) config_fail(key, "expected an object");
      apply_solver(value, key, &config->solver);
    } else if (key == "scene") {
      if (!value.is_object()) config_fail(key, "expected an object");
      apply_scene(value, key, &config->scene);
    } else if (key == "noise") {
      if (!value.is_object()) config_fail(key, "expected an object");
      apply_noise(value, key, &config->noise);
    } else if (key == "noise_levels") {
      config->noise_levels = get_number_list(value, key);
    } else if (key == "anisotropy_grid") {
      config->anisotropy_grid = get_number_list(value, key);
    } else if (key == "offset_grid") {
      config->offset_grid = get_number_list(value, key);
    } else if (key == "camera") {
      config->camera = camera_model_from_string(get_string(value, key));
    } else if (key == "translation") {
      config->with_translation = get_bool(value, key);
    } else if (key == "trials") {
      config->trials = get_int(value, key);
      if (config->trials < 1) config_fail(key, "trials must be >= 1");
    } else if (key == "master_seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) {
        config_fail(key, "expected an integer seed");
      }
      config->master_seed = value.get<std::uint64_t>();
    } else if (key == "rotation_init_perturbation") {
      config->rotation_init_perturbation_rad = get_number(value, key);
      if (config->rotation_init_perturbation_rad < 0.0) {
        config_fail(key, "perturbation must be >= 0");
      }
    } else if (key == "output_path") {
      config->output_path = get_string(value, key);
    } else if (key == "output_format") {
      const std::string format = get_string(value, key);
      if (format == "csv") {
        config->output_format = OutputFormat::csv;
      } else if (format == "markdown") {
        config->output_format = OutputFormat::markdown;
      } else {
        config_fail(key, "expected 'csv' or 'markdown'");
      }
    } else if (key == "parallelism") {
      config->parallelism = get_int(value, key);
      if (config->parallelism < 1) config_fail(key, "parallelism must be >= 1");
    } else if (key == "estimator") {
      config->estimator = estimator_from_string(get_string(value, key));
    } else if (key == "input_path") {
      config->input_path = get_string(value, key);
    } else {
      config_fail(key, "unknown key");
    }
  }
}

void validate(const RunConfig& config) {
  config.solver.validate();
  config.scene.validate();
  for (const double level : config.noise_levels) {
    if (!(level > 0.0)) fail(ErrorCode::config_error, "noise_levels: levels must be > 0");
  }
  for (const double beta : config.anisotropy_grid) {
    if (beta < 0.5 || beta > 1.0) {
      fail(ErrorCode::config_error, "anisotropy_grid: beta must be in [0.5, 1]");
    }
  }
  for (const double offset : config.offset_grid) {
    if (offset < 0.0 || offset > 1.0) {
      fail(ErrorCode::config_error, "offset_grid: offsets must be in [0, 1]");
    }
  }
}

}  // namespace

RunConfig parse_config(const nlohmann::json& file, const nlohmann::json& overrides) {
  RunConfig config;
  if (!file.is_null()) apply_object(file, &config);
  if (!overrides.is_null()) apply_object(overrides, &config);
  validate(config);
  return config;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  if (config.command) j["command"] = to_string(*config.command);
  j["solver"] = {
      {"outer_iterations", config.solver.outer_iterations},
      {"scf_iterations", config.solver.scf_iterations},
      {"lattice_points", config.solver.lattice_points},
      {"regularization", config.solver.regularization},
      {"lm_max_iterations", config.solver.lm_max_iterations},
      {"lm_tolerance", config.solver.lm_tolerance},
      {"kappa", config.solver.kappa},
      {"update_weights", config.solver.update_weights},
      {"run_joint_refinement", config.solver.run_joint_refinement},
      {"resample_lattice_each_round", config.solver.resample_lattice_each_round},
  };
  j["scene"] = {
      {"n_points", config.scene.n_points},
      {"depth_range", {config.scene.depth_min, config.scene.depth_max}},
      {"max_rotation", config.scene.max_rotation},
      {"max_translation", config.scene.max_translation},
      {"focal_px", config.scene.focal_px},
      {"image_width", config.scene.image_width},
      {"image_height", config.scene.image_height},
  };
  if (config.scene.max_bearing_angle_rad) {
    j["scene"]["max_bearing_angle"] = *config.scene.max_bearing_angle_rad;
  }
  j["noise"] = {
      {"type", to_string(config.noise.type)},
      {"level", config.noise.level_px},
      {"s_range", {config.noise.s_range[0], config.noise.s_range[1]}},
      {"beta_range", {config.noise.beta_range[0], config.noise.beta_range[1]}},
      {"alpha_range", {config.noise.alpha_range[0], config.noise.alpha_range[1]}},
  };
  j["noise_levels"] = config.noise_levels;
  j["anisotropy_grid"] = config.anisotropy_grid;
  j["offset_grid"] = config.offset_grid;
  j["camera"] = to_string(config.camera);
  j["translation"] = config.with_translation;
  j["trials"] = config.trials;
  j["master_seed"] = config.master_seed;
  j["rotation_init_perturbation"] = config.rotation_init_perturbation_rad;
  j["output_path"] = config.output_path;
  j["output_format"] = config.output_format == OutputFormat::csv ? "csv" : "markdown";
  j["parallelism"] = config.parallelism;
  j["estimator"] = to_string(config.estimator);
  if (!config.input_path.empty()) j["input_path"] = config.input_path;
  return j;
}

}  // namespace pnec
