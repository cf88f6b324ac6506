#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "unisyn/layers.hpp"

namespace unisyn {

struct DiscriminatorOptions {
  int modalities = 4;
  std::vector<std::int64_t> widths{64, 128, 256, 512};
  /// Number of leading 4x4 blocks with stride 2; the rest use stride 1.
  int strided_blocks = 3;
  NormKind norm = NormKind::kInstance;
};

/// Patch discriminator: 4x4 conv blocks (no normalization on the first)
/// followed by a 1-channel 4x4 head. Scores are unbounded.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(const DiscriminatorOptions& options);
  torch::Tensor forward(const torch::Tensor& image);  // B x 1 x H x W -> B x 1 x h x w

  std::vector<ConvBlock> blocks;
  torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// One independent discriminator per modality.
class DiscriminatorSetImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorSetImpl(DiscriminatorOptions options);

  /// `modality` is 0-based; throws std::out_of_range when it is not.
  torch::Tensor discriminate(const torch::Tensor& image, int modality);
  PatchDiscriminator& at(int modality);
  int modalities() const noexcept { return static_cast<int>(discriminators_.size()); }

  /// Score map size for an input of `size` pixels per side.
  std::int64_t score_size(std::int64_t size) const;

 private:
  DiscriminatorOptions options_;
  std::vector<PatchDiscriminator> discriminators_;
};
TORCH_MODULE(DiscriminatorSet);

}  // namespace unisyn
