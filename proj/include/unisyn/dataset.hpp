#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/preprocess.hpp"
#include "unisyn/rng.hpp"
#include "unisyn/volume.hpp"

namespace unisyn {

struct ManifestEntry {
  std::string subject_id;
  std::string split;  // "train", "val" or "test"
};

/// Dataset directory: `subjects/<id>.mmv` (+ `.hdr`) and a `manifest` file
/// with one "<id> <split>" line per subject.
void write_dataset(const std::filesystem::path& dir, const std::vector<MultiModalVolume>& volumes,
                   const std::vector<std::string>& splits);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
std::vector<MultiModalVolume> load_split(const std::filesystem::path& dir, const std::string& split);

struct SlicingOptions {
  std::int64_t slices_per_subject = 4;
  std::int64_t crop_height = 64;
  std::int64_t crop_width = 64;
  bool normalize = true;
  NormalizationSupport support = NormalizationSupport::kNonzeroVoxels;
};

/// 2-D training/evaluation slices with their subject of origin.
struct SliceDataset {
  std::vector<std::string> modality_names;
  std::vector<std::string> subject_ids;
  torch::Tensor slices;               // N x M x H x W float32
  std::vector<int> subject_of_slice;  // index into subject_ids

  std::int64_t size() const { return slices.defined() ? slices.size(0) : 0; }
  int modalities() const { return static_cast<int>(modality_names.size()); }
  /// All slices of one subject, stacked in axial order.
  torch::Tensor subject_slices(int subject) const;
};

SliceDataset make_slice_dataset(const std::vector<MultiModalVolume>& volumes,
                                const SlicingOptions& options);

/// Shuffled mini-batch index lists for one epoch; the last batch may be short.
std::vector<std::vector<std::int64_t>> epoch_batches(std::int64_t n_items, std::int64_t batch_size,
                                                     Rng& rng);

}  // namespace unisyn
