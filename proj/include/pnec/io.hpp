#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pnec/energy.hpp"
#include "pnec/experiment.hpp"

namespace pnec {

/// Correspondence file: one feature per line, whitespace separated,
/// `# comment` lines allowed. Per line: 3 reals f_host, 3 reals f_target,
/// 9 reals row-major target covariance. Bearings are normalized on read; a
/// deviation above 1e-6 triggers a warning through `warn`.
CorrespondenceSet read_correspondences(const std::filesystem::path& path,
                                       const std::function<void(const std::string&)>& warn = {});

void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& set);

/// Fixed CSV schema, one row per (cell x estimator):
/// camera,translation,noise_type,level_px,fixed_beta,offset_fraction,
/// estimator,trials,failures,mean_erot_deg,std_erot_deg,mean_et_deg,
/// std_et_deg,median_energy,mean_wall_ms
/// Every column except the trailing mean_wall_ms is deterministic for a fixed
/// (config, master_seed).
std::string results_to_csv(const std::vector<CellResult>& results);

/// Markdown table grouped by camera model and translation setting, rows per
/// estimator, columns per cell (noise level / beta / offset).
std::string results_to_markdown(const std::vector<CellResult>& results);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace pnec
