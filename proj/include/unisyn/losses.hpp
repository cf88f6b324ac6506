#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/conditioning.hpp"

namespace unisyn {

struct LossWeights {
  double synthesis = 100.0;
  double reconstruction = 30.0;
  double adversarial = 1.0;

  void validate() const;
};

/// Reduction inside each per-modality L1/L2 term.
enum class Reduction { kMean, kSum };

Reduction parse_reduction(const std::string& name);
std::string to_string(Reduction reduction);

struct LossRecord {
  double synthesis = 0.0;
  double reconstruction = 0.0;
  double adversarial = 0.0;
  double generator_total = 0.0;
  double discriminator = 0.0;
};

/// Sum over missing modalities of the L1 distance between output and target
/// channels. `outputs`/`targets` are B x M x H x W.
torch::Tensor synthesis_loss(const torch::Tensor& outputs, const torch::Tensor& targets,
                             const AvailabilityCondition& ac, Reduction reduction = Reduction::kMean);

/// Same as synthesis_loss over the available modalities.
torch::Tensor reconstruction_loss(const torch::Tensor& outputs, const torch::Tensor& targets,
                                  const AvailabilityCondition& ac,
                                  Reduction reduction = Reduction::kMean);

/// Least-squares generator objective over missing modalities:
/// L2(D(fake) - 1) + L2(D(real)). Score vectors have one entry per modality;
/// entries of available modalities may be undefined.
torch::Tensor generator_adversarial_loss(const std::vector<torch::Tensor>& fake_scores,
                                         const std::vector<torch::Tensor>& real_scores,
                                         const AvailabilityCondition& ac,
                                         Reduction reduction = Reduction::kMean);

/// Least-squares discriminator objective over missing modalities:
/// L2(D(fake)) + L2(D(real) - 1).
torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& fake_scores,
                                 const std::vector<torch::Tensor>& real_scores,
                                 const AvailabilityCondition& ac,
                                 Reduction reduction = Reduction::kMean);

torch::Tensor total_generator_loss(const torch::Tensor& synthesis, const torch::Tensor& reconstruction,
                                   const torch::Tensor& adversarial, const LossWeights& weights);
double total_generator_loss(double synthesis, double reconstruction, double adversarial,
                            const LossWeights& weights);

}  // namespace unisyn
