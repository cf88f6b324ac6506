#include "unisyn/experiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "unisyn/errors.hpp"
#include "unisyn/training.hpp"

namespace unisyn {

ExperimentResult run_experiment(const ExperimentConfig& config, const SliceDataset& train_set,
                                const SliceDataset& test_set, const std::filesystem::path& run_dir) {
  Trainer trainer(config);
  auto trained = trainer.train(train_set, run_dir);
  ExperimentResult result{trained.final_checkpoint, evaluate_matrix(trainer.generator(), test_set)};
  std::ostringstream hash;
  hash << std::hex << config_hash(config);
  result.report.checkpoint_hash = hash.str();
  result.report.dataset_id = config.data.dir;
  std::ofstream(run_dir / "report.csv", std::ios::trunc) << result.report.to_csv();
  std::ofstream(run_dir / "report.txt", std::ios::trunc) << result.report.to_table();
  return result;
}

std::vector<AblationVariant> ablation_variants() {
  return {
      {"full", [](ExperimentConfig&) {}},
      {"mms-encoder", [](ExperimentConfig& c) { c.model.encoder = EncoderVariant::kMms; }},
      {"c-encoder", [](ExperimentConfig& c) { c.model.encoder = EncoderVariant::kCommon; }},
      {"max-fusion", [](ExperimentConfig& c) { c.model.fusion = FusionStrategy::kMax; }},
      {"hemis-fusion", [](ExperimentConfig& c) { c.model.fusion = FusionStrategy::kHemis; }},
      {"no-curriculum", [](ExperimentConfig& c) { c.curriculum_enabled = false; }},
  };
}

namespace {

template <typename Select>
double average_rows(const MetricsReport& report, Select select, int available) {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : report.rows) {
    if (available >= 0 && row.condition.available_count() != available) continue;
    const double v = select(row);
    if (std::isfinite(v)) sum += v, ++n;
  }
  if (n == 0) throw MisuseError("report has no rows to average");
  return sum / n;
}

}  // namespace

double average_psnr(const MetricsReport& report) {
  return average_rows(report, [](const MetricsRow& r) { return r.mean_psnr(); }, -1);
}

double average_ssim(const MetricsReport& report) {
  return average_rows(report, [](const MetricsRow& r) { return r.mean_ssim(); }, -1);
}

double average_psnr_with_available(const MetricsReport& report, int available) {
  return average_rows(report, [](const MetricsRow& r) { return r.mean_psnr(); }, available);
}

}  // namespace unisyn
