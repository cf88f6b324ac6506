#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "unisyn/volume.hpp"

namespace unisyn {

/// Tissue classes of the synthetic phantom.
enum class Tissue : std::uint8_t { kBackground = 0, kBrain = 1, kVentricle = 2, kLesion = 3 };
inline constexpr int kTissueClasses = 4;

/// Parameters of the desk-scale phantom. A modality's intensity at a voxel of
/// class c is contrast[m][c] * c, plus noise inside the head.
struct PhantomSpec {
  std::vector<std::string> modality_names{"T1", "T2", "T1Gd", "FLAIR"};
  std::int64_t depth = 8;
  std::int64_t height = 64;
  std::int64_t width = 64;
  int min_blobs = 1;
  int max_blobs = 3;
  std::vector<std::array<double, kTissueClasses>> contrast{
      {0.0, 1.00, 0.25, 0.30},   // T1: dark fluid, lesion slightly hypo
      {0.0, 0.70, 1.00, 0.75},   // T2: bright fluid and lesion
      {0.0, 1.00, 0.25, 0.90},   // T1Gd: enhancing lesion
      {0.0, 0.85, 0.10, 0.80}};  // FLAIR: suppressed fluid, bright lesion
  double noise_std = 0.03;

  int modalities() const noexcept { return static_cast<int>(modality_names.size()); }
  /// Throws ConfigError on an empty or inconsistent contrast table.
  void validate() const;
  double intensity(int modality, Tissue t) const;
  /// Modalities where the lesion intensity differs from healthy brain.
  int lesion_contrast_modalities() const;
};

/// Per-voxel tissue labels of one subject, D x H x W.
struct TissueMap {
  std::int64_t depth = 0, height = 0, width = 0;
  std::vector<Tissue> labels;
  Tissue at(std::int64_t d, std::int64_t h, std::int64_t w) const {
    return labels[static_cast<std::size_t>((d * height + h) * width + w)];
  }
};

TissueMap generate_tissue_map(std::uint64_t seed, const PhantomSpec& spec);
MultiModalVolume render_phantom(const TissueMap& tissue, const PhantomSpec& spec,
                                std::uint64_t noise_seed, std::string subject_id);

/// Subjects are independent streams derived from `seed` and the subject
/// index, so the result does not depend on generation order.
std::vector<MultiModalVolume> generate_phantom_dataset(std::uint64_t seed, const PhantomSpec& spec,
                                                       int n_subjects);

}  // namespace unisyn
