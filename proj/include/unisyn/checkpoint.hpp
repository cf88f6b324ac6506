#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "unisyn/optim.hpp"

namespace unisyn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Contents of a checkpoint file. Tensor names are unique; the file stores
/// each tensor once, so aliased parameters stay aliased on restore.
struct CheckpointData {
  std::string config_json;
  std::uint32_t config_hash = 0;
  std::uint64_t epoch = 0;      // completed epochs
  std::uint64_t iteration = 0;  // completed iterations
  std::string rng_state;
  NamedTensors tensors;
};

/// Layout: "UNISYNCK", u32 version, u32 crc32(payload), u64 payload size,
/// payload. Written to a temporary file and renamed into place.
void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path);

/// Throws UnsupportedFormatError on a version mismatch and IntegrityError on
/// a bad magic, size or checksum.
CheckpointData read_checkpoint(const std::filesystem::path& path);

}  // namespace unisyn
