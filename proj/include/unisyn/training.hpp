#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <torch/torch.h>

#include "unisyn/checkpoint.hpp"
#include "unisyn/config.hpp"
#include "unisyn/dataset.hpp"
#include "unisyn/discriminator.hpp"
#include "unisyn/generator.hpp"
#include "unisyn/losses.hpp"
#include "unisyn/optim.hpp"

namespace unisyn {

/// Constant for epochs before decay_start, then linear decay reaching zero
/// at `epochs`. Valid for 0 <= epoch <= epochs.
double lr_at_epoch(int epoch, const ExperimentConfig& config);

/// Missing-count rule in force for an epoch, honouring curriculum.enabled.
MissingCountRule condition_rule(int epoch, const ExperimentConfig& config);

struct LogRow {
  int epoch = 0;
  std::int64_t iteration = 0;
  std::string condition;
  LossRecord losses;
  double learning_rate = 0.0;
};

nlohmann::json to_json(const LogRow& row);
LogRow log_row_from_json(const nlohmann::json& j);
std::vector<LogRow> read_log(const std::filesystem::path& path);

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path log;
};

/// Generator, discriminators, both optimizers, counters and the sampling rng.
class Trainer {
 public:
  /// Builds fresh models; parameter initialisation is seeded by config.seed.
  explicit Trainer(ExperimentConfig config);

  /// Restores everything from a checkpoint. `config_override` replaces the
  /// stored configuration (e.g. a longer schedule) when given.
  static Trainer from_checkpoint(const std::filesystem::path& path,
                                 std::optional<ExperimentConfig> config_override = std::nullopt);

  /// One iteration at the current epoch: samples the condition from the
  /// curriculum and uses lr_at_epoch.
  LossRecord training_step(const torch::Tensor& targets);
  /// One iteration with an explicit condition and learning rate.
  LossRecord training_step(const torch::Tensor& targets, const AvailabilityCondition& ac,
                           double learning_rate);

  /// Runs the remaining epochs. One JSON-lines row per iteration is appended
  /// to `<run_dir>/train_log.jsonl`; checkpoints go to
  /// `<run_dir>/checkpoints/epoch_NNNN.ckpt` every checkpoint_every epochs and
  /// at the end, the last one also copied to `<run_dir>/final.ckpt`.
  TrainResult train(const SliceDataset& train_set, const std::filesystem::path& run_dir,
                    const std::function<void(const LogRow&)>& on_row = {});

  CheckpointData checkpoint() const;
  void save_checkpoint(const std::filesystem::path& path) const;

  /// Generator output for zero-imputed `targets` under `ac`, without grad.
  torch::Tensor synthesize(const torch::Tensor& targets, const AvailabilityCondition& ac);

  const ExperimentConfig& config() const noexcept { return config_; }
  Generator& generator() noexcept { return generator_; }
  DiscriminatorSet& discriminators() noexcept { return discriminators_; }
  Optimizer& generator_optimizer() noexcept { return opt_g_; }
  Optimizer& discriminator_optimizer() noexcept { return opt_d_; }
  int epoch() const noexcept { return epoch_; }
  std::int64_t iteration() const noexcept { return iteration_; }
  Rng& rng() noexcept { return rng_; }
  torch::ScalarType dtype() const noexcept;

 private:
  Trainer(ExperimentConfig config, bool);

  ExperimentConfig config_;
  Generator generator_{nullptr};
  DiscriminatorSet discriminators_{nullptr};
  Optimizer opt_g_;
  Optimizer opt_d_;
  Rng rng_;
  int epoch_ = 0;
  std::int64_t iteration_ = 0;
};

}  // namespace unisyn
