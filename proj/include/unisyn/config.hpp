#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "unisyn/conditioning.hpp"
#include "unisyn/dataset.hpp"
#include "unisyn/discriminator.hpp"
#include "unisyn/generator.hpp"
#include "unisyn/losses.hpp"
#include "unisyn/optim.hpp"
#include "unisyn/preprocess.hpp"

namespace unisyn {

struct ModelConfig {
  std::vector<std::int64_t> widths{32, 64, 128, 256, 512};
  EncoderVariant encoder = EncoderVariant::kCds;
  int first_shared_scale = 3;
  FusionStrategy fusion = FusionStrategy::kDfum;
  std::int64_t attention_width = 8;
  HardSoftCombine combine = HardSoftCombine::kMean;
  bool normalize_gates = false;
  NormKind norm = NormKind::kInstance;
  OutputActivation output = OutputActivation::kClamp;
  double intensity_ceiling = 8.0;
  std::vector<std::int64_t> discriminator_widths{64, 128, 256, 512};
  int discriminator_strided_blocks = 3;
  bool double_precision = false;
};

struct DataConfig {
  std::string dir;
  std::int64_t slices_per_subject = 4;
  bool normalize = true;
  NormalizationSupport support = NormalizationSupport::kNonzeroVoxels;
};

/// Everything needed to rebuild a model and rerun its training.
struct ExperimentConfig {
  std::vector<std::string> modality_names{"T1", "T2", "T1Gd", "FLAIR"};
  std::int64_t image_size = 64;
  std::uint64_t seed = 0;
  ModelConfig model;
  LossWeights loss;
  Reduction reduction = Reduction::kMean;
  bool curriculum_enabled = true;
  CurriculumSchedule curriculum;
  OptimizerOptions optimizer;
  double learning_rate = 2e-4;
  int decay_start = 50;
  int epochs = 200;
  int batch_size = 32;
  int checkpoint_every = 10;
  bool train_discriminator = true;
  DataConfig data;
  std::string run_dir = "runs/default";

  int modalities() const noexcept { return static_cast<int>(modality_names.size()); }
  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  GeneratorOptions generator_options() const;
  DiscriminatorOptions discriminator_options() const;
  SlicingOptions slicing_options() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Overlays the keys present in `j` onto `config`; unknown keys are errors.
void apply_json(ExperimentConfig& config, const nlohmann::json& j);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Applies "dotted.key=value" to a JSON document. The value is parsed as JSON
/// when possible and kept as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// crc32 of the canonical JSON dump.
std::uint32_t config_hash(const ExperimentConfig& config);

}  // namespace unisyn
