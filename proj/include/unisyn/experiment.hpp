#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "unisyn/config.hpp"
#include "unisyn/dataset.hpp"
#include "unisyn/metrics.hpp"

namespace unisyn {

struct ExperimentResult {
  std::filesystem::path checkpoint;
  MetricsReport report;
};

/// Trains from scratch into `run_dir`, then evaluates the full matrix.
ExperimentResult run_experiment(const ExperimentConfig& config, const SliceDataset& train_set,
                                const SliceDataset& test_set, const std::filesystem::path& run_dir);

struct AblationVariant {
  std::string name;
  std::function<void(ExperimentConfig&)> apply;
};

/// "full" plus one variant per replaced component: mms-encoder, c-encoder,
/// max-fusion, hemis-fusion, no-curriculum.
std::vector<AblationVariant> ablation_variants();

/// Average over configurations of the per-configuration mean (itself an
/// average over synthesized modalities).
double average_psnr(const MetricsReport& report);
double average_ssim(const MetricsReport& report);

/// Average of the per-configuration means over configurations with exactly
/// `available` inputs.
double average_psnr_with_available(const MetricsReport& report, int available);

}  // namespace unisyn
