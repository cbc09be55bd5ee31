#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnec/config.hpp"
#include "pnec/errors.hpp"
#include "pnec/io.hpp"
#include "pnec/selftest.hpp"
#include "pnec/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeFailure = 2;
constexpr int kExitSelftestFailure = 3;

json pose_to_json(const pnec::RelativePose& pose) {
  json rotation = json::array();
  for (int r = 0; r < 3; ++r) {
    rotation.push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  }
  return {{"rotation", rotation},
          {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

json report_to_json(const pnec::EstimateReport& report) {
  return {{"pose", pose_to_json(report.pose)},
          {"final_energy", report.final_energy},
          {"energy_trace", report.energy_trace},
          {"outer_iterations_used", report.outer_iterations_used},
          {"refinement_steps_accepted", report.refinement_steps_accepted},
          {"rotation_lm_diverged", report.rotation_lm_diverged},
          {"refinement_no_progress", report.refinement_no_progress},
          {"wall_time_seconds", report.wall_time_seconds}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buffer;
}

void write_manifest(const std::filesystem::path& path, const pnec::RunConfig& config,
                    const json& extra) {
  json manifest = {
      {"config", pnec::config_to_json(config)},
      {"master_seed", config.master_seed},
      {"version", pnec::kVersion},
      {"created_utc", utc_timestamp()},  // informational, not deterministic
  };
  manifest.update(extra);
  pnec::write_text_file(path, manifest.dump(2) + "\n");
}

int run_sweep(const pnec::RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path output(config.output_path);
  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());

  std::vector<pnec::CellResult> results;
  bool truncated = false;
  std::string failure;
  try {
    results = pnec::run_experiment(config.experiment(),
                                   [](const std::string& line) { std::cerr << line << "\n"; });
  } catch (const std::exception& error) {
    truncated = true;
    failure = error.what();
  }

  std::string body = config.output_format == pnec::OutputFormat::markdown
                         ? pnec::results_to_markdown(results)
                         : pnec::results_to_csv(results);
  if (truncated) body += "# TRUNCATED: " + failure + "\n";
  const std::filesystem::path results_path =
      output.string() + (config.output_format == pnec::OutputFormat::markdown ? ".md" : ".csv");
  pnec::write_text_file(results_path, body);

  const double total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json cells = json::array();
  for (const pnec::CellResult& result : results) {
    cells.push_back({{"cell_index", result.cell_index},
                     {"estimator", pnec::to_string(result.estimator)},
                     {"mean_wall_ms", result.stats.mean_wall_ms},
                     {"failures", result.stats.failures}});
  }
  write_manifest(output.string() + ".manifest.json", config,
                 {{"results_file", results_path.string()},
                  {"total_wall_seconds", total_seconds},
                  {"truncated", truncated},
                  {"cells", cells}});

  if (truncated) {
    std::cerr << "error: " << failure << "\n";
    return kExitRuntimeFailure;
  }
  std::cerr << "wrote " << results_path.string() << " (" << total_seconds << " s)\n";
  return kExitOk;
}

int run_estimate_file(const pnec::RunConfig& config) {
  if (config.input_path.empty()) {
    std::cerr << "config error: estimate-file requires an input path\n";
    return kExitConfigError;
  }
  const pnec::CorrespondenceSet set = pnec::read_correspondences(
      config.input_path, [](const std::string& warning) { std::cerr << warning << "\n"; });
  const pnec::EstimateReport report = config.estimator == pnec::EstimatorKind::pnec
                                          ? pnec::pnec_estimate(set, config.solver)
                                          : pnec::nec_estimate(set, config.solver);
  std::cout << report_to_json(report).dump(2) << "\n";
  return kExitOk;
}

int run_selftest_command(const pnec::RunConfig& config) {
  const std::vector<pnec::CheckResult> checks = pnec::run_selftest(config.master_seed);
  bool all_passed = true;
  for (const pnec::CheckResult& check : checks) {
    std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.details
              << "\n";
    all_passed = all_passed && check.passed;
  }
  return all_passed ? kExitOk : kExitSelftestFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NEC/PNEC relative pose estimation and synthetic benchmarks"};
  app.set_version_flag("--version", pnec::kVersion);

  std::string config_path;
  std::string command_name;
  json overrides = json::object();

  app.add_option("--config", config_path, "JSON config file");

  std::int64_t seed = -1;
  app.add_option("--seed", seed, "master seed (fallback: PNEC_SEED env var)");
  int trials = -1;
  app.add_option("--trials", trials, "trials per grid cell");
  int parallelism = -1;
  app.add_option("--parallelism", parallelism, "worker threads");
  std::string output;
  app.add_option("--output", output, "output path stem");
  std::string format;
  app.add_option("--format", format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));
  int solver_outer = -1;
  app.add_option("--solver.S", solver_outer, "alternating rounds before refinement");
  int solver_lattice = -1;
  app.add_option("--solver.K", solver_lattice, "Fibonacci lattice points");
  int solver_scf = -1;
  app.add_option("--solver.scf-iters", solver_scf, "SCF iterations per round");
  double regularization = -1.0;
  app.add_option("--regularization", regularization, "variance regularization c");
  std::string camera;
  app.add_option("--camera", camera, "omni or pinhole")
      ->check(CLI::IsMember({"omni", "pinhole"}));
  bool no_translation = false;
  app.add_flag("--no-translation", no_translation, "zero-translation experiment");
  std::string estimator;
  app.add_option("--estimator", estimator, "nec or pnec (estimate-file)")
      ->check(CLI::IsMember({"nec", "pnec"}));
  std::string input_path;

  app.require_subcommand(0, 1);
  for (const char* name : {"run-synthetic", "sweep-noise", "sweep-anisotropy", "sweep-offset",
                           "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();
    sub->callback([&command_name, name]() { command_name = name; });
  }
  CLI::App* estimate = app.add_subcommand("estimate-file");
  estimate->fallthrough();
  estimate->add_option("input", input_path, "correspondence file")->required();
  estimate->callback([&command_name]() { command_name = "estimate-file"; });

  CLI11_PARSE(app, argc, argv);

  try {
    json file_config = json(nullptr);
    if (!config_path.empty()) {
      std::ifstream stream(config_path);
      if (!stream) {
        std::cerr << "config error: cannot open " << config_path << "\n";
        return kExitConfigError;
      }
      try {
        stream >> file_config;
      } catch (const json::parse_error& error) {
        std::cerr << "config error: " << config_path << ": " << error.what() << "\n";
        return kExitConfigError;
      }
    }

    if (!command_name.empty()) overrides["command"] = command_name;
    if (seed >= 0) {
      overrides["master_seed"] = static_cast<std::uint64_t>(seed);
    } else if (const char* env_seed = std::getenv("PNEC_SEED");
               env_seed != nullptr && (file_config.is_null() ||
                                       !file_config.contains("master_seed"))) {
      overrides["master_seed"] = std::strtoull(env_seed, nullptr, 10);
    }
    if (trials >= 0) overrides["trials"] = trials;
    if (parallelism >= 0) overrides["parallelism"] = parallelism;
    if (!output.empty()) overrides["output_path"] = output;
    if (!format.empty()) overrides["output_format"] = format;
    if (!camera.empty()) overrides["camera"] = camera;
    if (no_translation) overrides["translation"] = false;
    if (!estimator.empty()) overrides["estimator"] = estimator;
    if (!input_path.empty()) overrides["input_path"] = input_path;
    if (solver_outer >= 0) overrides["solver"]["outer_iterations"] = solver_outer;
    if (solver_lattice >= 0) overrides["solver"]["lattice_points"] = solver_lattice;
    if (solver_scf >= 0) overrides["solver"]["scf_iterations"] = solver_scf;
    if (regularization >= 0.0) overrides["solver"]["regularization"] = regularization;

    pnec::RunConfig config;
    try {
      config = pnec::parse_config(file_config, overrides);
    } catch (const pnec::Error& error) {
      std::cerr << "config error: " << error.what() << "\n";
      return kExitConfigError;
    }

    if (!config.command) {
      std::cerr << "config error: no command given (use a subcommand or \"command\" in the "
                   "config file)\n";
      return kExitConfigError;
    }

    switch (*config.command) {
      case pnec::Command::run_synthetic:
      case pnec::Command::sweep_noise:
      case pnec::Command::sweep_anisotropy:
      case pnec::Command::sweep_offset:
        return run_sweep(config);
      case pnec::Command::estimate_file:
        return run_estimate_file(config);
      case pnec::Command::selftest:
        return run_selftest_command(config);
    }
    return kExitOk;
  } catch (const pnec::Error& error) {
    if (error.code() == pnec::ErrorCode::config_error) {
      std::cerr << "config error: " << error.what() << "\n";
      return kExitConfigError;
    }
    std::cerr << "error: " << error.what() << "\n";
    return kExitRuntimeFailure;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitRuntimeFailure;
  }
}
