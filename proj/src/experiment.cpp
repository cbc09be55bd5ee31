#include "pnec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pnec/errors.hpp"
#include "pnec/metrics.hpp"

namespace pnec {

const char* to_string(EstimatorKind kind) { return kind == EstimatorKind::nec ? "nec" : "pnec"; }

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "nec") return EstimatorKind::nec;
  if (name == "pnec") return EstimatorKind::pnec;
  fail(ErrorCode::config_error, "unknown estimator '" + name + "'");
}

namespace {

struct TrialRecord {
  bool ok = false;
  double erot_deg = 0.0;
  double et_deg = 0.0;
  bool et_valid = false;
  double energy = 0.0;
  double wall_ms = 0.0;
};

constexpr std::uint64_t kCellStream = 0x63656c6cull;    // "cell"
constexpr std::uint64_t kTrialStream = 0x7472696cull;   // "tril"
constexpr std::uint64_t kBetaStream = 0x62657461ull;    // "beta"
constexpr std::uint64_t kOffsetStream = 0x6f666673ull;  // "offs"
constexpr std::uint64_t kInitStream = 0x696e6974ull;    // "init"

TrialRecord run_trial(const SweepCell& cell, const ExperimentConfig& config,
                      const ExperimentParams& experiment, std::uint64_t cell_seed,
                      int trial, EstimatorKind estimator) {
  TrialRecord record;
  try {
    const std::uint64_t instance_seed =
        derive_seed(cell_seed, {kTrialStream, static_cast<std::uint64_t>(trial)});
    SceneConfig scene = config.scene;
    scene.translation_enabled = cell.with_translation;

    ProblemInstance instance = generate_instance(scene, cell.noise, cell.camera, instance_seed,
                                                 experiment, config.solver.kappa);
    if (cell.offset_fraction > 0.0) {
      SplitMix64 offset_rng(
          derive_seed(cell_seed, {kOffsetStream, static_cast<std::uint64_t>(trial)}));
      instance = offset_covariances(instance, cell.offset_fraction, offset_rng);
    }

    Mat3 rotation_init = Mat3::Identity();
    if (config.rotation_init_perturbation_rad > 0.0) {
      SplitMix64 init_rng(
          derive_seed(cell_seed, {kInitStream, static_cast<std::uint64_t>(trial)}));
      rotation_init = instance.true_rotation *
                      rotation_from_axis_angle(init_rng.unit_vector(),
                                               config.rotation_init_perturbation_rad);
    }

    const EstimateReport report =
        (estimator == EstimatorKind::pnec)
            ? pnec_estimate(instance.pairs, config.solver, rotation_init)
            : nec_estimate(instance.pairs, config.solver, rotation_init);

    record.ok = true;
    record.erot_deg = rotation_error_deg(instance.true_rotation, report.pose.rotation);
    if (cell.with_translation && instance.has_translation) {
      record.et_valid = true;
      record.et_deg =
          translation_error_deg(instance.true_translation_dir, report.pose.translation);
    }
    record.energy = report.final_energy;
    record.wall_ms = report.wall_time_seconds * 1e3;
  } catch (const std::exception&) {
    record.ok = false;
  }
  return record;
}

CellStats aggregate(const std::vector<TrialRecord>& records) {
  CellStats stats;
  stats.trials = static_cast<int>(records.size());

  std::vector<double> erot;
  std::vector<double> et;
  std::vector<double> energies;
  double wall_sum = 0.0;
  for (const TrialRecord& record : records) {
    if (!record.ok) {
      ++stats.failures;
      continue;
    }
    erot.push_back(record.erot_deg);
    if (record.et_valid) et.push_back(record.et_deg);
    energies.push_back(record.energy);
    wall_sum += record.wall_ms;
  }
  const auto mean_of = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
  };
  const auto std_of = [](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (const double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
  };
  stats.mean_erot_deg = mean_of(erot);
  stats.std_erot_deg = std_of(erot, stats.mean_erot_deg);
  stats.et_defined = !et.empty();
  stats.mean_et_deg = mean_of(et);
  stats.std_et_deg = std_of(et, stats.mean_et_deg);
  if (!energies.empty()) {
    std::sort(energies.begin(), energies.end());
    const std::size_t n = energies.size();
    stats.median_energy =
        (n % 2 == 1) ? energies[n / 2] : 0.5 * (energies[n / 2 - 1] + energies[n / 2]);
  }
  stats.mean_wall_ms = erot.empty() ? 0.0 : wall_sum / static_cast<double>(erot.size());
  return stats;
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& config,
                                       const std::function<void(const std::string&)>& log) {
  if (config.trials < 1) fail(ErrorCode::invalid_argument, "trials must be >= 1");
  if (config.parallelism < 1) fail(ErrorCode::invalid_argument, "parallelism must be >= 1");
  if (config.cells.empty()) fail(ErrorCode::invalid_argument, "no cells in sweep");
  config.solver.validate();

  std::vector<CellResult> results;
  for (std::size_t cell_index = 0; cell_index < config.cells.size(); ++cell_index) {
    const SweepCell& cell = config.cells[cell_index];
    const std::uint64_t cell_seed =
        derive_seed(config.master_seed, {kCellStream, static_cast<std::uint64_t>(cell_index)});

    ExperimentParams experiment;
    if (cell.fixed_beta) {
      experiment.shared_beta = *cell.fixed_beta;
    } else if (cell.noise.type == NoiseType::aniso_homo) {
      SplitMix64 beta_rng(derive_seed(cell_seed, {kBetaStream}));
      experiment.shared_beta =
          beta_rng.uniform(cell.noise.beta_range[0], cell.noise.beta_range[1]);
    }

    for (const EstimatorKind estimator : config.estimators) {
      std::vector<TrialRecord> records(config.trials);
      const int workers = std::min(config.parallelism, config.trials);
      if (workers <= 1) {
        for (int trial = 0; trial < config.trials; ++trial) {
          records[trial] = run_trial(cell, config, experiment, cell_seed, trial, estimator);
        }
      } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int worker = 0; worker < workers; ++worker) {
          pool.emplace_back([&, worker]() {
            for (int trial = worker; trial < config.trials; trial += workers) {
              records[trial] = run_trial(cell, config, experiment, cell_seed, trial, estimator);
            }
          });
        }
        for (std::thread& thread : pool) thread.join();
      }

      CellResult result;
      result.cell_index = cell_index;
      result.cell = cell;
      result.estimator = estimator;
      result.stats = aggregate(records);
      if (log) {
        log("cell " + std::to_string(cell_index) + " [" + to_string(cell.camera) + ", " +
            (cell.with_translation ? "w/ t" : "w/o t") + ", " + to_string(cell.noise.type) +
            ", " + std::to_string(cell.noise.level_px) + " px] " + to_string(estimator) +
            ": mean e_rot " + std::to_string(result.stats.mean_erot_deg) + " deg, failures " +
            std::to_string(result.stats.failures));
      }
      results.push_back(result);
    }
  }
  return results;
}

}  // namespace pnec
