#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/conditioning.hpp"
#include "unisyn/encoder.hpp"

namespace unisyn {

enum class FusionStrategy { kDfum, kMax, kHemis };
enum class HardSoftCombine { kMean, kConcat };

FusionStrategy parse_fusion_strategy(const std::string& name);
std::string to_string(FusionStrategy strategy);
HardSoftCombine parse_hard_soft_combine(const std::string& name);
std::string to_string(HardSoftCombine combine);

struct FusionOptions {
  int modalities = 4;
  std::vector<std::int64_t> widths{32, 64, 128, 256, 512};
  FusionStrategy strategy = FusionStrategy::kDfum;
  /// Channels of each kernel branch in an attention block.
  std::int64_t attention_width = 8;
  HardSoftCombine combine = HardSoftCombine::kMean;
  /// Divide the gates by their sum over available modalities.
  bool normalize_gates = false;
};

/// Per-scale fused maps, same shapes as one modality's pyramid.
struct UnifiedFeatureSet {
  std::vector<torch::Tensor> features;
  int scales() const noexcept { return static_cast<int>(features.size()); }
};

/// Element-wise maximum over the available modalities.
torch::Tensor hard_integrate(std::span<const torch::Tensor> features, const AvailabilityCondition& ac);

/// Sum over available i of gates[i] * features[i]. Gates are B x 1 x H x W
/// and broadcast over channels; gates of masked modalities are ignored.
torch::Tensor soft_integrate(std::span<const torch::Tensor> features,
                             std::span<const torch::Tensor> gates, const AvailabilityCondition& ac);

/// Spatial attention with 3x3, 5x5 and 7x7 branches reduced by a 1x1
/// convolution to one logit map.
class AttentionBlockImpl : public torch::nn::Module {
 public:
  AttentionBlockImpl(std::int64_t channels, std::int64_t branch_width);
  torch::Tensor forward(const torch::Tensor& x);  // logits, B x 1 x H x W

  torch::nn::Conv2d branch3{nullptr}, branch5{nullptr}, branch7{nullptr}, reduce{nullptr};
};
TORCH_MODULE(AttentionBlock);

/// Unification at one scale.
class ScaleUnifierImpl : public torch::nn::Module {
 public:
  ScaleUnifierImpl(const FusionOptions& options, std::int64_t channels);

  /// Sigmoid gates per modality; masked modalities get an all-zero map that
  /// carries no gradient.
  std::vector<torch::Tensor> compute_attention(std::span<const torch::Tensor> features,
                                               const AvailabilityCondition& ac);
  torch::Tensor forward(std::span<const torch::Tensor> features, const AvailabilityCondition& ac);

  AttentionBlock& attention(int modality);

 private:
  torch::Tensor hemis(std::span<const torch::Tensor> features, const AvailabilityCondition& ac);

  FusionOptions options_;
  std::int64_t channels_;
  std::vector<AttentionBlock> attention_;
  torch::nn::Conv2d hemis_mix_{nullptr};
  torch::nn::Conv2d combine_mix_{nullptr};
};
TORCH_MODULE(ScaleUnifier);

class FeatureUnifierImpl : public torch::nn::Module {
 public:
  explicit FeatureUnifierImpl(FusionOptions options);

  UnifiedFeatureSet forward(const ModalityFeatureSet& features, const AvailabilityCondition& ac);
  ScaleUnifier& scale(int s) { return scales_.at(static_cast<std::size_t>(s)); }
  const FusionOptions& options() const noexcept { return options_; }

 private:
  FusionOptions options_;
  std::vector<ScaleUnifier> scales_;
};
TORCH_MODULE(FeatureUnifier);

}  // namespace unisyn
