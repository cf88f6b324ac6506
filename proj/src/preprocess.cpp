#include "unisyn/preprocess.hpp"

#include <cmath>

#include "unisyn/errors.hpp"

namespace unisyn {

MultiModalVolume mean_normalize(const MultiModalVolume& volume, NormalizationSupport support) {
  volume.validate_shape();
  MultiModalVolume out = volume;
  for (int m = 0; m < volume.modalities(); ++m) {
    auto data = out.modality(m);
    double sum = 0.0;
    std::size_t count = 0;
    for (float v : data) {
      if (!std::isfinite(v)) {
        throw NormalizationError("non-finite voxel in modality " + volume.modality_names[m] +
                                 " of '" + volume.subject_id + "'");
      }
      if (support == NormalizationSupport::kAllVoxels || v != 0.0f) {
        sum += v;
        ++count;
      }
    }
    if (count == 0 || sum == 0.0) {
      throw NormalizationError("modality " + volume.modality_names[m] + " of '" +
                               volume.subject_id + "' has no nonzero voxels");
    }
    const double mean = sum / static_cast<double>(count);
    for (float& v : data) v = static_cast<float>(static_cast<double>(v) / mean);
  }
  return out;
}

torch::Tensor extract_center_slices(const MultiModalVolume& volume, std::int64_t n_slices,
                                    std::int64_t crop_h, std::int64_t crop_w) {
  volume.validate_shape();
  if (n_slices < 1 || n_slices > volume.depth) {
    throw DimensionError("cannot take " + std::to_string(n_slices) + " slices from depth " +
                         std::to_string(volume.depth));
  }
  if (crop_h < 1 || crop_w < 1 || crop_h > volume.height || crop_w > volume.width) {
    throw DimensionError("crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                         " does not fit slice " + std::to_string(volume.height) + "x" +
                         std::to_string(volume.width));
  }
  const std::int64_t d0 = (volume.depth - n_slices) / 2;
  const std::int64_t h0 = (volume.height - crop_h) / 2;
  const std::int64_t w0 = (volume.width - crop_w) / 2;

  auto full = torch::from_blob(const_cast<float*>(volume.voxels.data()),
                               {volume.modalities(), volume.depth, volume.height, volume.width},
                               torch::kFloat32);
  return full.slice(1, d0, d0 + n_slices)
      .slice(2, h0, h0 + crop_h)
      .slice(3, w0, w0 + crop_w)
      .permute({1, 0, 2, 3})
      .contiguous()
      .clone();
}

}  // namespace unisyn
