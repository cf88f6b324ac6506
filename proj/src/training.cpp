#include "unisyn/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "unisyn/errors.hpp"

namespace unisyn {

namespace fs = std::filesystem;
using nlohmann::json;

double lr_at_epoch(int epoch, const ExperimentConfig& config) {
  if (epoch < 0 || epoch > config.epochs) {
    throw ConfigError("epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(config.epochs) + "]");
  }
  if (epoch < config.decay_start) return config.learning_rate;
  return config.learning_rate * static_cast<double>(config.epochs - epoch) /
         static_cast<double>(config.epochs - config.decay_start);
}

MissingCountRule condition_rule(int epoch, const ExperimentConfig& config) {
  if (config.curriculum_enabled) {
    return curriculum_missing_count(epoch, config.curriculum, config.modalities());
  }
  return config.curriculum.after == PostCurriculumPolicy::kUniformSubset
             ? MissingCountRule::uniform_subset()
             : MissingCountRule::uniform_count();
}

json to_json(const LogRow& row) {
  return json{{"epoch", row.epoch},
              {"iter", row.iteration},
              {"ac", row.condition},
              {"l_syn", row.losses.synthesis},
              {"l_rec", row.losses.reconstruction},
              {"l_adv", row.losses.adversarial},
              {"l_gen", row.losses.generator_total},
              {"l_dis", row.losses.discriminator},
              {"lr", row.learning_rate}};
}

LogRow log_row_from_json(const json& j) {
  LogRow row;
  row.epoch = j.at("epoch").get<int>();
  row.iteration = j.at("iter").get<std::int64_t>();
  row.condition = j.at("ac").get<std::string>();
  row.losses.synthesis = j.at("l_syn").get<double>();
  row.losses.reconstruction = j.at("l_rec").get<double>();
  row.losses.adversarial = j.at("l_adv").get<double>();
  row.losses.generator_total = j.at("l_gen").get<double>();
  row.losses.discriminator = j.at("l_dis").get<double>();
  row.learning_rate = j.at("lr").get<double>();
  return row;
}

std::vector<LogRow> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open log " + path.string());
  std::vector<LogRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(log_row_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw CorruptFileError("bad log row in " + path.string() + ": " + e.what());
    }
  }
  return rows;
}

namespace {

Rng seeded_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedU};
  return Rng(seq);
}

Generator build_generator(const ExperimentConfig& c) {
  Generator g(c.generator_options());
  if (c.model.double_precision) g->to(torch::kFloat64);
  return g;
}

DiscriminatorSet build_discriminators(const ExperimentConfig& c) {
  DiscriminatorSet d(c.discriminator_options());
  if (c.model.double_precision) d->to(torch::kFloat64);
  return d;
}

const ExperimentConfig& seeded(const ExperimentConfig& c) {
  c.validate();
  torch::manual_seed(c.seed);
  return c;
}

void check_finite(const char* term, double value) {
  if (!std::isfinite(value)) throw DivergenceError(term, value);
}

// Turns off parameter gradients of a module for the guard's lifetime.
class FrozenParameters {
 public:
  explicit FrozenParameters(torch::nn::Module& module) : params_(module.parameters()) {
    for (auto& p : params_) p.requires_grad_(false);
  }
  ~FrozenParameters() {
    for (auto& p : params_) p.requires_grad_(true);
  }
  FrozenParameters(const FrozenParameters&) = delete;
  FrozenParameters& operator=(const FrozenParameters&) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

}  // namespace

Trainer::Trainer(ExperimentConfig config) : Trainer(std::move(config), true) {}

Trainer::Trainer(ExperimentConfig config, bool)
    : config_(seeded(config)),
      generator_(build_generator(config_)),
      discriminators_(build_discriminators(config_)),
      opt_g_(named_parameters(*generator_), config_.optimizer),
      opt_d_(named_parameters(*discriminators_), config_.optimizer),
      rng_(seeded_rng(config_.seed)) {}

torch::ScalarType Trainer::dtype() const noexcept {
  return config_.model.double_precision ? torch::kFloat64 : torch::kFloat32;
}

LossRecord Trainer::training_step(const torch::Tensor& targets) {
  const auto ac = sample_condition(rng_, condition_rule(epoch_, config_), config_.modalities());
  return training_step(targets, ac, lr_at_epoch(epoch_, config_));
}

LossRecord Trainer::training_step(const torch::Tensor& raw_targets, const AvailabilityCondition& ac,
                                  double learning_rate) {
  ac.require_training_valid();
  const auto targets = raw_targets.to(dtype());
  if (targets.dim() != 4 || targets.size(1) != config_.modalities() ||
      targets.size(2) != config_.image_size || targets.size(3) != config_.image_size) {
    throw DimensionError("training batch must be B x " + std::to_string(config_.modalities()) + " x " +
                         std::to_string(config_.image_size) + " x " + std::to_string(config_.image_size));
  }
  generator_->train();
  discriminators_->train();
  const auto batch = zero_impute(targets, ac);
  const auto fake = generator_->forward(batch.pixels, ac);
  const auto M = static_cast<std::size_t>(config_.modalities());

  // Discriminator update on detached fakes.
  std::vector<torch::Tensor> fake_scores(M), real_scores(M);
  opt_d_.zero_grad();
  {
    std::optional<torch::NoGradGuard> no_grad;
    if (!config_.train_discriminator) no_grad.emplace();
    for (int i : ac.missing_indices()) {
      fake_scores[i] = discriminators_->discriminate(fake.narrow(1, i, 1).detach(), i);
      real_scores[i] = discriminators_->discriminate(targets.narrow(1, i, 1), i);
    }
  }
  const auto l_dis = discriminator_loss(fake_scores, real_scores, ac, config_.reduction);
  LossRecord record;
  record.discriminator = l_dis.item<double>();
  check_finite("l_dis", record.discriminator);
  if (config_.train_discriminator) {
    l_dis.backward();
    opt_d_.step(learning_rate);
  }

  // Generator update. The real-image term of the adversarial loss carries
  // no generator gradient; it is evaluated without a graph. Discriminator
  // weights are constants here.
  opt_g_.zero_grad();
  const FrozenParameters frozen(*discriminators_);
  const bool adversarial_grad = config_.loss.adversarial != 0.0;
  for (int i : ac.missing_indices()) {
    if (adversarial_grad) {
      fake_scores[i] = discriminators_->discriminate(fake.narrow(1, i, 1), i);
    } else {
      torch::NoGradGuard no_grad;
      fake_scores[i] = discriminators_->discriminate(fake.narrow(1, i, 1).detach(), i);
    }
    torch::NoGradGuard no_grad;
    real_scores[i] = discriminators_->discriminate(targets.narrow(1, i, 1), i);
  }
  const auto l_syn = synthesis_loss(fake, targets, ac, config_.reduction);
  const auto l_rec = reconstruction_loss(fake, targets, ac, config_.reduction);
  const auto l_adv = generator_adversarial_loss(fake_scores, real_scores, ac, config_.reduction);
  const auto l_gen = total_generator_loss(l_syn, l_rec, l_adv, config_.loss);
  record.synthesis = l_syn.item<double>();
  record.reconstruction = l_rec.item<double>();
  record.adversarial = l_adv.item<double>();
  record.generator_total = l_gen.item<double>();
  check_finite("l_syn", record.synthesis);
  check_finite("l_rec", record.reconstruction);
  check_finite("l_adv", record.adversarial);
  check_finite("l_gen", record.generator_total);
  l_gen.backward();
  opt_g_.step(learning_rate);
  return record;
}

TrainResult Trainer::train(const SliceDataset& train_set, const fs::path& run_dir,
                           const std::function<void(const LogRow&)>& on_row) {
  if (train_set.size() == 0) throw ConfigError("training split is empty");
  if (train_set.modalities() != config_.modalities()) {
    throw DimensionError("dataset has " + std::to_string(train_set.modalities()) +
                         " modalities, config expects " + std::to_string(config_.modalities()));
  }
  fs::create_directories(run_dir / "checkpoints");
  save_config(config_, run_dir / "effective_config.json");
  const auto log_path = run_dir / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError("cannot open " + log_path.string());

  fs::path last_checkpoint;
  const auto data = train_set.slices.to(dtype());
  while (epoch_ < config_.epochs) {
    const double lr = lr_at_epoch(epoch_, config_);
    const auto rule = condition_rule(epoch_, config_);
    for (const auto& indices : epoch_batches(train_set.size(), config_.batch_size, rng_)) {
      const auto ac = sample_condition(rng_, rule, config_.modalities());
      const auto targets = data.index_select(0, torch::tensor(indices, torch::kInt64));
      LogRow row{epoch_, iteration_, ac.to_string(), training_step(targets, ac, lr), lr};
      ++iteration_;
      log << to_json(row).dump() << '\n';
      if (on_row) on_row(row);
    }
    log.flush();
    ++epoch_;
    if (epoch_ % config_.checkpoint_every == 0 || epoch_ == config_.epochs) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch_);
      last_checkpoint = run_dir / "checkpoints" / name;
      save_checkpoint(last_checkpoint);
    }
  }
  if (last_checkpoint.empty()) {
    last_checkpoint = run_dir / "checkpoints" / "final.ckpt";
    save_checkpoint(last_checkpoint);
  }
  const auto final_path = run_dir / "final.ckpt";
  fs::copy_file(last_checkpoint, final_path, fs::copy_options::overwrite_existing);
  return {final_path, log_path};
}

CheckpointData Trainer::checkpoint() const {
  CheckpointData data;
  data.config_json = to_json(config_).dump();
  data.config_hash = config_hash(config_);
  data.epoch = static_cast<std::uint64_t>(epoch_);
  data.iteration = static_cast<std::uint64_t>(iteration_);
  std::ostringstream rng_text;
  rng_text << rng_;
  data.rng_state = rng_text.str();
  for (const auto& [name, p] : opt_g_.parameters()) data.tensors.emplace_back("generator/" + name, p);
  for (const auto& [name, p] : opt_d_.parameters()) data.tensors.emplace_back("discriminator/" + name, p);
  for (auto& [name, t] : opt_g_.state()) data.tensors.emplace_back("opt_g/" + name, t);
  for (auto& [name, t] : opt_d_.state()) data.tensors.emplace_back("opt_d/" + name, t);
  return data;
}

void Trainer::save_checkpoint(const fs::path& path) const { write_checkpoint(checkpoint(), path); }

Trainer Trainer::from_checkpoint(const fs::path& path, std::optional<ExperimentConfig> config_override) {
  auto data = read_checkpoint(path);
  ExperimentConfig stored;
  try {
    stored = config_from_json(json::parse(data.config_json));
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint config is not valid JSON: " + std::string(e.what()));
  }
  if (config_hash(stored) != data.config_hash) {
    throw IntegrityError("checkpoint config hash mismatch in " + path.string());
  }
  Trainer trainer(config_override ? *config_override : stored, true);

  std::map<std::string, torch::Tensor> g_params, d_params, g_state, d_state;
  for (auto& [name, t] : data.tensors) {
    const auto slash = name.find('/');
    const auto group = name.substr(0, slash);
    auto key = name.substr(slash + 1);
    if (group == "generator") g_params[key] = t;
    else if (group == "discriminator") d_params[key] = t;
    else if (group == "opt_g") g_state[key] = t;
    else if (group == "opt_d") d_state[key] = t;
    else throw IntegrityError("unknown checkpoint tensor group '" + group + "'");
  }
  auto restore = [&](const Optimizer& opt, const std::map<std::string, torch::Tensor>& values,
                     const char* what) {
    if (values.size() != opt.parameters().size()) {
      throw ConfigError(std::string(what) + " parameter count differs from the checkpoint");
    }
    torch::NoGradGuard no_grad;
    for (const auto& [name, p] : opt.parameters()) {
      const auto it = values.find(name);
      if (it == values.end() || !it->second.sizes().equals(p.sizes())) {
        throw ConfigError(std::string(what) + " parameter '" + name + "' missing or reshaped in checkpoint");
      }
      p.copy_(it->second.to(p.scalar_type()));
    }
  };
  restore(trainer.opt_g_, g_params, "generator");
  restore(trainer.opt_d_, d_params, "discriminator");
  trainer.opt_g_.load_state(g_state);
  trainer.opt_d_.load_state(d_state);
  trainer.epoch_ = static_cast<int>(data.epoch);
  trainer.iteration_ = static_cast<std::int64_t>(data.iteration);
  std::istringstream rng_text(data.rng_state);
  rng_text >> trainer.rng_;
  if (!rng_text) throw IntegrityError("checkpoint rng state is unreadable");
  return trainer;
}

torch::Tensor Trainer::synthesize(const torch::Tensor& targets, const AvailabilityCondition& ac) {
  torch::NoGradGuard no_grad;
  generator_->eval();
  const auto batch = zero_impute(targets.to(dtype()), ac);
  return generator_->forward(batch.pixels, ac);
}

}  // namespace unisyn
