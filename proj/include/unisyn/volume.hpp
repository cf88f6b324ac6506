#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace unisyn {

/// Co-registered multi-modal volume, voxels stored M x D x H x W in C order.
struct MultiModalVolume {
  std::vector<std::string> modality_names;
  std::string subject_id;
  std::int64_t depth = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> voxels;

  int modalities() const noexcept { return static_cast<int>(modality_names.size()); }
  std::int64_t voxels_per_modality() const noexcept { return depth * height * width; }

  std::span<float> modality(int m);
  std::span<const float> modality(int m) const;
  float& at(int m, std::int64_t d, std::int64_t h, std::int64_t w);
  float at(int m, std::int64_t d, std::int64_t h, std::int64_t w) const;

  /// Throws DimensionError when the voxel count does not match the shape.
  void validate_shape() const;
};

inline constexpr int kVolumeFormatVersion = 1;

/// Writes `<path>` (raw little-endian float32 payload) and `<path>.hdr`.
void save_volume(const MultiModalVolume& volume, const std::filesystem::path& path);
MultiModalVolume load_volume(const std::filesystem::path& path);

std::filesystem::path header_path(const std::filesystem::path& volume_path);

}  // namespace unisyn
