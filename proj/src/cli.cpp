#include "unisyn/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "unisyn/config.hpp"
#include "unisyn/errors.hpp"
#include "unisyn/experiment.hpp"
#include "unisyn/phantom.hpp"
#include "unisyn/plot.hpp"
#include "unisyn/training.hpp"

namespace unisyn {

namespace fs = std::filesystem;

namespace {

fs::path under_run_root(const fs::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kRunRootEnv); root && *root) return fs::path(root) / p;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Options shared by commands that build an ExperimentConfig.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data_dir;
  std::string run_dir;
  int epochs = -1;
  long long seed = -1;
  int batch_size = -1;
  double learning_rate = -1.0;
  std::string optimizer;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config");
    cmd->add_option("--set", overrides, "override a config key, e.g. --set model.fusion=max");
    cmd->add_option("--data", data_dir, "dataset directory");
    cmd->add_option("--run-dir", run_dir, "run directory");
    cmd->add_option("--epochs", epochs, "total epochs");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--batch-size", batch_size, "mini-batch size");
    cmd->add_option("--lr", learning_rate, "initial learning rate");
    cmd->add_option("--optimizer", optimizer, "sgd or adam");
  }

  ExperimentConfig build() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot open config " + config_path);
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
      }
    }
    for (const auto& o : overrides) apply_override(j, o);
    if (!data_dir.empty()) j["data"]["dir"] = data_dir;
    if (!run_dir.empty()) j["run_dir"] = run_dir;
    if (epochs >= 0) j["training"]["epochs"] = epochs;
    if (seed >= 0) j["seed"] = static_cast<std::uint64_t>(seed);
    if (batch_size >= 0) j["training"]["batch_size"] = batch_size;
    if (learning_rate >= 0) j["optimizer"]["learning_rate"] = learning_rate;
    if (!optimizer.empty()) j["optimizer"]["kind"] = optimizer;
    return config_from_json(j);
  }
};

SliceDataset load_slices(const ExperimentConfig& config, const std::string& split) {
  if (config.data.dir.empty()) throw ConfigError("no dataset directory given (--data or data.dir)");
  auto volumes = load_split(config.data.dir, split);
  if (volumes.empty()) throw ConfigError("split '" + split + "' of " + config.data.dir + " is empty");
  return make_slice_dataset(volumes, config.slicing_options());
}

std::string hex(std::uint32_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

CommandResult dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unified multi-modal image synthesis toolkit", "unisyn"};
  app.require_subcommand(1);

  // phantom-gen
  auto* gen = app.add_subcommand("phantom-gen", "write a synthetic multi-modal phantom dataset");
  std::string gen_out;
  int gen_train = 50, gen_val = 0, gen_test = 10;
  std::uint64_t gen_seed = 0;
  PhantomSpec gen_spec;
  std::string gen_modalities;
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--train", gen_train, "training subjects");
  gen->add_option("--val", gen_val, "validation subjects");
  gen->add_option("--test", gen_test, "test subjects");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--size", gen_spec.height, "slice height and width");
  gen->add_option("--depth", gen_spec.depth, "axial slices per subject");
  gen->add_option("--noise", gen_spec.noise_std, "noise standard deviation");
  gen->add_option("--modalities", gen_modalities, "comma-separated modality names (2-4, uses the first contrast rows)");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  ConfigFlags train_flags;
  train_flags.add_to(train);
  std::string resume;
  train->add_option("--resume", resume, "continue from a checkpoint");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score every availability configuration");
  std::string eval_ckpt, eval_data, eval_out = "evaluation", eval_split = "test";
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  evaluate->add_option("--data", eval_data, "dataset directory")->required();
  evaluate->add_option("--split", eval_split, "manifest split to score");
  evaluate->add_option("--out", eval_out, "output directory for report.csv / report.txt");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "impute missing modalities of one volume");
  std::string synth_ckpt, synth_input, synth_out, synth_ac;
  synth->add_option("--checkpoint", synth_ckpt, "checkpoint file")->required();
  synth->add_option("--input", synth_input, "input .mmv volume")->required();
  synth->add_option("--ac", synth_ac, "availability condition, e.g. 1011")->required();
  synth->add_option("--out", synth_out, "output .mmv volume")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and compare encoder/fusion/curriculum variants");
  ConfigFlags ablate_flags;
  ablate_flags.add_to(ablate);
  std::string ablate_seeds = "0", ablate_variants_arg, ablate_out = "ablation";
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds");
  ablate->add_option("--variants", ablate_variants_arg, "comma-separated subset of variants");
  ablate->add_option("--out", ablate_out, "output directory");

  // plot
  auto* plot = app.add_subcommand("plot", "render PSNR/SSIM bar charts from a report CSV");
  std::string plot_report, plot_out = ".";
  plot->add_option("--report", plot_report, "report.csv")->required();
  plot->add_option("--out", plot_out, "output directory");

  std::vector<std::string> argv_storage{"unisyn"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return {kExitOk, {}};
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return {kExitOk, {}};
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return {kExitUsage, {}};
  }

  // Validated before anything is loaded.
  std::optional<AvailabilityCondition> synth_condition;
  if (synth->parsed()) {
    try {
      synth_condition = AvailabilityCondition::parse(synth_ac);
      synth_condition->require_input_valid();
    } catch (const InvalidConditionError& e) {
      err << "error: " << e.what() << '\n';
      return {kExitUsage, {}};
    }
  }

  CommandResult result;
  try {
    if (gen->parsed()) {
      gen_spec.width = gen_spec.height;
      if (!gen_modalities.empty()) {
        auto names = split_list(gen_modalities);
        if (names.size() < 2 || names.size() > gen_spec.contrast.size()) {
          throw ConfigError("--modalities needs 2 to " + std::to_string(gen_spec.contrast.size()) + " names");
        }
        gen_spec.contrast.resize(names.size());
        gen_spec.modality_names = names;
      }
      const int total = gen_train + gen_val + gen_test;
      auto volumes = generate_phantom_dataset(gen_seed, gen_spec, total);
      std::vector<std::string> splits;
      for (int i = 0; i < total; ++i)
        splits.push_back(i < gen_train ? "train" : i < gen_train + gen_val ? "val" : "test");
      write_dataset(gen_out, volumes, splits);
      out << "wrote " << total << " subjects to " << gen_out << '\n';
      result.artifacts.push_back(fs::path(gen_out) / "manifest");
    } else if (train->parsed()) {
      auto config = train_flags.build();
      config.run_dir = under_run_root(config.run_dir).string();
      auto trainer = resume.empty() ? Trainer(config) : Trainer::from_checkpoint(resume, config);
      const auto train_set = load_slices(config, "train");
      auto trained = trainer.train(train_set, config.run_dir, [&](const LogRow& row) {
        if (row.iteration % 50 == 0) {
          out << "epoch " << row.epoch << " iter " << row.iteration << " ac " << row.condition
              << " l_gen " << row.losses.generator_total << " l_dis " << row.losses.discriminator << '\n';
        }
      });
      out << "final checkpoint " << trained.final_checkpoint.string() << '\n';
      result.artifacts = {trained.final_checkpoint, trained.log};
    } else if (evaluate->parsed()) {
      auto trainer = Trainer::from_checkpoint(eval_ckpt);
      auto config = trainer.config();
      config.data.dir = eval_data;
      const auto test_set = load_slices(config, eval_split);
      auto report = evaluate_matrix(trainer.generator(), test_set);
      report.checkpoint_hash = hex(trainer.checkpoint().config_hash);
      report.dataset_id = fs::path(eval_data).filename().string() + ":" + eval_split;
      const auto csv = fs::path(eval_out) / "report.csv";
      const auto table = fs::path(eval_out) / "report.txt";
      write_text(csv, report.to_csv());
      write_text(table, report.to_table());
      out << report.to_table();
      result.artifacts = {csv, table};
    } else if (synth->parsed()) {
      auto trainer = Trainer::from_checkpoint(synth_ckpt);
      const auto& config = trainer.config();
      auto volume = load_volume(synth_input);
      if (volume.modalities() != config.modalities() || synth_condition->size() != config.modalities()) {
        throw DimensionError("volume, condition and model disagree on the modality count");
      }
      if (volume.height != config.image_size || volume.width != config.image_size) {
        throw DimensionError("volume slices must be " + std::to_string(config.image_size) + "x" +
                             std::to_string(config.image_size));
      }
      auto slices = extract_center_slices(volume, volume.depth, volume.height, volume.width);
      auto output = trainer.synthesize(slices, *synth_condition).to(torch::kFloat32);
      // Available modalities keep their input voxels.
      for (int i : synth_condition->available_indices()) output.select(1, i).copy_(slices.select(1, i));
      output = output.permute({1, 0, 2, 3}).contiguous();
      MultiModalVolume result_volume = volume;
      std::memcpy(result_volume.voxels.data(), output.data_ptr<float>(),
                  result_volume.voxels.size() * sizeof(float));
      save_volume(result_volume, synth_out);
      out << "wrote " << synth_out << '\n';
      result.artifacts = {synth_out, header_path(synth_out)};
    } else if (ablate->parsed()) {
      const auto base = ablate_flags.build();
      const auto train_set = load_slices(base, "train");
      const auto test_set = load_slices(base, "test");
      auto variants = ablation_variants();
      if (!ablate_variants_arg.empty()) {
        const auto wanted = split_list(ablate_variants_arg);
        std::erase_if(variants, [&](const AblationVariant& v) {
          return std::find(wanted.begin(), wanted.end(), v.name) == wanted.end();
        });
        if (variants.size() != wanted.size()) throw ConfigError("unknown variant in --variants");
      }
      const fs::path out_dir = under_run_root(ablate_out);
      std::ostringstream csv;
      csv << "variant,seed,psnr,ssim\n";
      std::map<std::string, std::pair<double, double>> sums;
      const auto seeds = split_list(ablate_seeds);
      for (const auto& v : variants) {
        for (const auto& seed_text : seeds) {
          auto config = base;
          v.apply(config);
          config.seed = std::stoull(seed_text);
          const auto run_dir = out_dir / (v.name + "_seed" + seed_text);
          config.run_dir = run_dir.string();
          const auto r = run_experiment(config, train_set, test_set, run_dir);
          const double p = average_psnr(r.report), s = average_ssim(r.report);
          sums[v.name].first += p;
          sums[v.name].second += s;
          char line[160];
          std::snprintf(line, sizeof line, "%s,%s,%.6f,%.6f\n", v.name.c_str(), seed_text.c_str(), p, s);
          csv << line;
          out << line;
        }
      }
      for (const auto& v : variants) {
        char line[160];
        const double n = static_cast<double>(seeds.size());
        std::snprintf(line, sizeof line, "%s,mean,%.6f,%.6f\n", v.name.c_str(), sums[v.name].first / n,
                      sums[v.name].second / n);
        csv << line;
      }
      write_text(out_dir / "ablation.csv", csv.str());
      result.artifacts = {out_dir / "ablation.csv"};
    } else if (plot->parsed()) {
      const auto report = parse_report_csv(read_text(plot_report));
      const auto psnr_svg = fs::path(plot_out) / "psnr.svg";
      const auto ssim_svg = fs::path(plot_out) / "ssim.svg";
      write_text(psnr_svg, render_bar_chart_svg(report, PlotMetric::kPsnr));
      write_text(ssim_svg, render_bar_chart_svg(report, PlotMetric::kSsim));
      result.artifacts = {psnr_svg, ssim_svg};
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    result.exit_code = kExitFailure;
  }
  return result;
}

}  // namespace unisyn
