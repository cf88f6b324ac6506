#include "unisyn/losses.hpp"

#include <cmath>

#include "unisyn/errors.hpp"

namespace unisyn {

void LossWeights::validate() const {
  for (double w : {synthesis, reconstruction, adversarial}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
}

Reduction parse_reduction(const std::string& name) {
  if (name == "mean") return Reduction::kMean;
  if (name == "sum") return Reduction::kSum;
  throw ConfigError("unknown reduction '" + name + "' (mean|sum)");
}

std::string to_string(Reduction reduction) { return reduction == Reduction::kMean ? "mean" : "sum"; }

namespace {

torch::Tensor reduce(const torch::Tensor& x, Reduction reduction) {
  return reduction == Reduction::kMean ? x.mean() : x.sum();
}

void check_images(const torch::Tensor& outputs, const torch::Tensor& targets,
                  const AvailabilityCondition& ac) {
  if (!outputs.sizes().equals(targets.sizes())) {
    throw DimensionError("outputs and targets differ in shape");
  }
  if (outputs.dim() != 4 || outputs.size(1) != ac.size()) {
    throw DimensionError("loss expects B x " + std::to_string(ac.size()) + " x H x W images");
  }
}

torch::Tensor masked_l1(const torch::Tensor& outputs, const torch::Tensor& targets,
                        const AvailabilityCondition& ac, bool over_missing, Reduction reduction) {
  check_images(outputs, targets, ac);
  auto total = torch::zeros({}, outputs.options());
  for (int i = 0; i < ac.size(); ++i) {
    if (ac.missing(i) != over_missing) continue;
    total = total + reduce((outputs.select(1, i) - targets.select(1, i)).abs(), reduction);
  }
  return total;
}

void check_scores(const std::vector<torch::Tensor>& fake, const std::vector<torch::Tensor>& real,
                  const AvailabilityCondition& ac) {
  if (static_cast<int>(fake.size()) != ac.size() || static_cast<int>(real.size()) != ac.size()) {
    throw DimensionError("one score map per modality required");
  }
  for (int i : ac.missing_indices()) {
    if (!fake[i].defined() || !real[i].defined() || !fake[i].sizes().equals(real[i].sizes())) {
      throw DimensionError("score maps of modality " + std::to_string(i) + " are missing or differ in shape");
    }
  }
}

torch::Tensor scalar_like(const std::vector<torch::Tensor>& scores, const AvailabilityCondition& ac) {
  for (int i : ac.missing_indices()) return torch::zeros({}, scores[i].options());
  for (const auto& s : scores)
    if (s.defined()) return torch::zeros({}, s.options());
  return torch::zeros({});
}

}  // namespace

torch::Tensor synthesis_loss(const torch::Tensor& outputs, const torch::Tensor& targets,
                             const AvailabilityCondition& ac, Reduction reduction) {
  return masked_l1(outputs, targets, ac, /*over_missing=*/true, reduction);
}

torch::Tensor reconstruction_loss(const torch::Tensor& outputs, const torch::Tensor& targets,
                                  const AvailabilityCondition& ac, Reduction reduction) {
  return masked_l1(outputs, targets, ac, /*over_missing=*/false, reduction);
}

torch::Tensor generator_adversarial_loss(const std::vector<torch::Tensor>& fake_scores,
                                         const std::vector<torch::Tensor>& real_scores,
                                         const AvailabilityCondition& ac, Reduction reduction) {
  check_scores(fake_scores, real_scores, ac);
  auto total = scalar_like(fake_scores, ac);
  for (int i : ac.missing_indices()) {
    total = total + reduce((fake_scores[i] - 1.0).pow(2), reduction) +
            reduce(real_scores[i].pow(2), reduction);
  }
  return total;
}

torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& fake_scores,
                                 const std::vector<torch::Tensor>& real_scores,
                                 const AvailabilityCondition& ac, Reduction reduction) {
  check_scores(fake_scores, real_scores, ac);
  auto total = scalar_like(fake_scores, ac);
  for (int i : ac.missing_indices()) {
    total = total + reduce(fake_scores[i].pow(2), reduction) +
            reduce((real_scores[i] - 1.0).pow(2), reduction);
  }
  return total;
}

torch::Tensor total_generator_loss(const torch::Tensor& synthesis, const torch::Tensor& reconstruction,
                                   const torch::Tensor& adversarial, const LossWeights& weights) {
  return weights.synthesis * synthesis + weights.reconstruction * reconstruction +
         weights.adversarial * adversarial;
}

double total_generator_loss(double synthesis, double reconstruction, double adversarial,
                            const LossWeights& weights) {
  return weights.synthesis * synthesis + weights.reconstruction * reconstruction +
         weights.adversarial * adversarial;
}

}  // namespace unisyn
