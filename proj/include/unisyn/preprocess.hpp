#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "unisyn/volume.hpp"

namespace unisyn {

enum class NormalizationSupport { kNonzeroVoxels, kAllVoxels };

/// Divides each modality by the mean of its (nonzero) voxels, so the
/// resulting mean over that support is 1. Statistics are per volume.
MultiModalVolume mean_normalize(const MultiModalVolume& volume,
                                NormalizationSupport support = NormalizationSupport::kNonzeroVoxels);

/// Picks `n_slices` consecutive axial slices centered on D/2 and center-crops
/// them to crop_h x crop_w. Window starts are floor((extent - size) / 2), so
/// an odd margin leaves the extra voxel on the high-index side.
/// Returns n_slices x M x crop_h x crop_w float32.
torch::Tensor extract_center_slices(const MultiModalVolume& volume, std::int64_t n_slices,
                                    std::int64_t crop_h, std::int64_t crop_w);

}  // namespace unisyn
