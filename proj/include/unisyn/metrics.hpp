#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/conditioning.hpp"
#include "unisyn/dataset.hpp"
#include "unisyn/generator.hpp"

namespace unisyn {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) with the peak taken over both volumes jointly.
/// Identical inputs give kInfinitePsnr.
double psnr(std::span<const float> estimate, std::span<const float> reference);
double psnr(std::span<const double> estimate, std::span<const double> reference);

struct SsimConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  /// c1 = (0.01 R)^2, c2 = (0.03 R)^2.
  static SsimConstants for_range(double dynamic_range);
};

/// Global SSIM from whole-volume means, variances and covariance.
double ssim(std::span<const float> estimate, std::span<const float> reference,
            const SsimConstants& constants);
double ssim(std::span<const double> estimate, std::span<const double> reference,
            const SsimConstants& constants);
/// SSIM with constants derived from the joint dynamic range of the inputs.
double ssim(std::span<const float> estimate, std::span<const float> reference);

/// Two-sided Welch t-test p-value.
double two_sample_ttest(std::span<const double> a, std::span<const double> b);

struct CellStats {
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  int n = 0;             // subjects with finite PSNR
  int infinite_psnr = 0; // subjects excluded from the PSNR statistics
};

/// One availability configuration; cells[i] is populated only for missing i.
struct MetricsRow {
  AvailabilityCondition condition;
  std::vector<std::optional<CellStats>> cells;

  double mean_psnr() const;
  double mean_ssim() const;
};

struct MetricsReport {
  std::vector<std::string> modality_names;
  std::string checkpoint_hash;
  std::string dataset_id;
  std::vector<MetricsRow> rows;

  /// CSV: ac,modality,psnr_mean,psnr_std,ssim_mean,ssim_std,n
  std::string to_csv() const;
  /// Fixed-width table, one line per configuration, "- " for available cells.
  std::string to_table() const;
};

MetricsReport parse_report_csv(const std::string& csv);

/// Maps a zero-imputed B x M x H x W batch to generator output.
using SynthesisFn = std::function<torch::Tensor(const torch::Tensor& pixels, const AvailabilityCondition& ac)>;

struct EvaluationOptions {
  std::int64_t batch_size = 16;
  /// Conditions to score; empty means every valid one.
  std::vector<AvailabilityCondition> conditions;
};

/// Scores every missing modality of every configuration per subject volume
/// and aggregates over subjects.
MetricsReport evaluate_matrix(const SynthesisFn& synthesize, const SliceDataset& test_set,
                              const EvaluationOptions& options = {});
MetricsReport evaluate_matrix(Generator& generator, const SliceDataset& test_set,
                              const EvaluationOptions& options = {});

}  // namespace unisyn
