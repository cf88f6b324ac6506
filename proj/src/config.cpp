#include "unisyn/config.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <zlib.h>

#include "unisyn/errors.hpp"

namespace unisyn {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (modality_names.size() < 2) throw ConfigError("at least 2 modalities are required");
  if (model.widths.empty()) throw ConfigError("model.widths must not be empty");
  const std::int64_t factor = std::int64_t{1} << (model.widths.size() - 1);
  if (image_size < factor || image_size % factor != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) + " must be a multiple of " +
                      std::to_string(factor));
  }
  for (auto w : model.widths)
    if (w < 1) throw ConfigError("model widths must be positive");
  for (auto w : model.discriminator_widths)
    if (w < 1) throw ConfigError("discriminator widths must be positive");
  if (model.attention_width < 1) throw ConfigError("attention_width must be positive");
  if (!(model.intensity_ceiling > 0.0)) throw ConfigError("intensity_ceiling must be > 0");
  loss.validate();
  curriculum.validate();
  if (epochs <= 0) throw ConfigError("epochs must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (decay_start < 0 || decay_start > epochs) throw ConfigError("decay_start must lie in [0, epochs]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (data.slices_per_subject < 1) throw ConfigError("data.slices_per_subject must be >= 1");
}

GeneratorOptions ExperimentConfig::generator_options() const {
  GeneratorOptions g;
  g.encoder.modalities = modalities();
  g.encoder.widths = model.widths;
  g.encoder.variant = model.encoder;
  g.encoder.norm = model.norm;
  g.encoder.first_shared_scale = model.first_shared_scale;
  g.fusion.modalities = modalities();
  g.fusion.widths = model.widths;
  g.fusion.strategy = model.fusion;
  g.fusion.attention_width = model.attention_width;
  g.fusion.combine = model.combine;
  g.fusion.normalize_gates = model.normalize_gates;
  g.decoder.modalities = modalities();
  g.decoder.widths = model.widths;
  g.decoder.norm = model.norm;
  g.decoder.output = model.output;
  g.decoder.intensity_ceiling = model.intensity_ceiling;
  return g;
}

DiscriminatorOptions ExperimentConfig::discriminator_options() const {
  DiscriminatorOptions d;
  d.modalities = modalities();
  d.widths = model.discriminator_widths;
  d.strided_blocks = model.discriminator_strided_blocks;
  d.norm = model.norm;
  return d;
}

SlicingOptions ExperimentConfig::slicing_options() const {
  SlicingOptions s;
  s.slices_per_subject = data.slices_per_subject;
  s.crop_height = image_size;
  s.crop_width = image_size;
  s.normalize = data.normalize;
  s.support = data.support;
  return s;
}

namespace {

std::string policy_name(PostCurriculumPolicy p) {
  return p == PostCurriculumPolicy::kUniformCount ? "uniform_count" : "uniform_subset";
}

PostCurriculumPolicy parse_policy(const std::string& s) {
  if (s == "uniform_count") return PostCurriculumPolicy::kUniformCount;
  if (s == "uniform_subset") return PostCurriculumPolicy::kUniformSubset;
  throw ConfigError("unknown curriculum.after '" + s + "' (uniform_count|uniform_subset)");
}

std::string support_name(NormalizationSupport s) {
  return s == NormalizationSupport::kNonzeroVoxels ? "nonzero" : "all";
}

NormalizationSupport parse_support(const std::string& s) {
  if (s == "nonzero") return NormalizationSupport::kNonzeroVoxels;
  if (s == "all") return NormalizationSupport::kAllVoxels;
  throw ConfigError("unknown data.support '" + s + "' (nonzero|all)");
}

/// Reads the keys of one JSON object, rejecting any it does not know.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path_ + key + "': " + e.what());
    }
  }

  template <typename T, typename Parse>
  void read_enum(const char* key, T& out, Parse parse) {
    std::string s;
    read(key, s);
    if (j_.contains(key)) out = parse(s);
  }

  std::optional<Section> child(const char* key) {
    seen_.push_back(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + key + ".");
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
        throw ConfigError("unknown config key '" + path_ + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace

json to_json(const ExperimentConfig& c) {
  return json{
      {"modalities", c.modality_names},
      {"image_size", c.image_size},
      {"seed", c.seed},
      {"run_dir", c.run_dir},
      {"model",
       {{"widths", c.model.widths},
        {"encoder", to_string(c.model.encoder)},
        {"first_shared_scale", c.model.first_shared_scale},
        {"fusion", to_string(c.model.fusion)},
        {"attention_width", c.model.attention_width},
        {"combine", to_string(c.model.combine)},
        {"normalize_gates", c.model.normalize_gates},
        {"norm", to_string(c.model.norm)},
        {"output", to_string(c.model.output)},
        {"intensity_ceiling", c.model.intensity_ceiling},
        {"discriminator_widths", c.model.discriminator_widths},
        {"discriminator_strided_blocks", c.model.discriminator_strided_blocks},
        {"double_precision", c.model.double_precision}}},
      {"loss",
       {{"lambda_syn", c.loss.synthesis},
        {"lambda_rec", c.loss.reconstruction},
        {"lambda_adv", c.loss.adversarial},
        {"reduction", to_string(c.reduction)}}},
      {"curriculum",
       {{"enabled", c.curriculum_enabled},
        {"easy", c.curriculum.easy_epochs},
        {"moderate", c.curriculum.moderate_epochs},
        {"hard", c.curriculum.hard_epochs},
        {"after", policy_name(c.curriculum.after)}}},
      {"optimizer",
       {{"kind", to_string(c.optimizer.kind)},
        {"learning_rate", c.learning_rate},
        {"decay_start", c.decay_start},
        {"momentum", c.optimizer.momentum},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps}}},
      {"training",
       {{"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"checkpoint_every", c.checkpoint_every},
        {"train_discriminator", c.train_discriminator}}},
      {"data",
       {{"dir", c.data.dir},
        {"slices_per_subject", c.data.slices_per_subject},
        {"normalize", c.data.normalize},
        {"support", support_name(c.data.support)}}},
  };
}

void apply_json(ExperimentConfig& c, const json& j) {
  Section root(j, "");
  root.read("modalities", c.modality_names);
  root.read("image_size", c.image_size);
  root.read("seed", c.seed);
  root.read("run_dir", c.run_dir);
  if (auto m = root.child("model")) {
    m->read("widths", c.model.widths);
    m->read_enum("encoder", c.model.encoder, parse_encoder_variant);
    m->read("first_shared_scale", c.model.first_shared_scale);
    m->read_enum("fusion", c.model.fusion, parse_fusion_strategy);
    m->read("attention_width", c.model.attention_width);
    m->read_enum("combine", c.model.combine, parse_hard_soft_combine);
    m->read("normalize_gates", c.model.normalize_gates);
    m->read_enum("norm", c.model.norm, parse_norm_kind);
    m->read_enum("output", c.model.output, parse_output_activation);
    m->read("intensity_ceiling", c.model.intensity_ceiling);
    m->read("discriminator_widths", c.model.discriminator_widths);
    m->read("discriminator_strided_blocks", c.model.discriminator_strided_blocks);
    m->read("double_precision", c.model.double_precision);
    m->finish();
  }
  if (auto l = root.child("loss")) {
    l->read("lambda_syn", c.loss.synthesis);
    l->read("lambda_rec", c.loss.reconstruction);
    l->read("lambda_adv", c.loss.adversarial);
    l->read_enum("reduction", c.reduction, parse_reduction);
    l->finish();
  }
  if (auto cu = root.child("curriculum")) {
    cu->read("enabled", c.curriculum_enabled);
    cu->read("easy", c.curriculum.easy_epochs);
    cu->read("moderate", c.curriculum.moderate_epochs);
    cu->read("hard", c.curriculum.hard_epochs);
    cu->read_enum("after", c.curriculum.after, parse_policy);
    cu->finish();
  }
  if (auto o = root.child("optimizer")) {
    o->read_enum("kind", c.optimizer.kind, parse_optimizer_kind);
    o->read("learning_rate", c.learning_rate);
    o->read("decay_start", c.decay_start);
    o->read("momentum", c.optimizer.momentum);
    o->read("beta1", c.optimizer.beta1);
    o->read("beta2", c.optimizer.beta2);
    o->read("eps", c.optimizer.eps);
    o->finish();
  }
  if (auto t = root.child("training")) {
    t->read("epochs", c.epochs);
    t->read("batch_size", c.batch_size);
    t->read("checkpoint_every", c.checkpoint_every);
    t->read("train_discriminator", c.train_discriminator);
    t->finish();
  }
  if (auto d = root.child("data")) {
    d->read("dir", c.data.dir);
    d->read("slices_per_subject", c.data.slices_per_subject);
    d->read("normalize", c.data.normalize);
    d->read_enum("support", c.data.support, parse_support);
    d->finish();
  }
  root.finish();
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  apply_json(c, j);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  }
  std::string pointer;
  std::string key = assignment.substr(0, eq);
  for (char& ch : key)
    if (ch == '.') ch = '/';
  pointer = "/" + key;
  const auto text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  j[json::json_pointer(pointer)] = value;
}

std::uint32_t config_hash(const ExperimentConfig& config) {
  const auto text = to_json(config).dump();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace unisyn
