#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

namespace unisyn {

enum class NormKind { kInstance, kNone };

NormKind parse_norm_kind(const std::string& name);
std::string to_string(NormKind kind);

inline constexpr double kLeakySlope = 0.2;

/// Convolution with "same"-style padding (k/2, or 1 for k=4), optional
/// instance normalization and optional leaky ReLU.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                std::int64_t stride, NormKind norm, bool activate = true);

  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};

 private:
  NormKind norm_;
  bool activate_;
};
TORCH_MODULE(ConvBlock);

/// One pyramid level: two 3x3 conv blocks. The first downsamples by 2 unless
/// this is the full-resolution level.
class ScaleBlockImpl : public torch::nn::Module {
 public:
  ScaleBlockImpl(std::int64_t in_channels, std::int64_t out_channels, bool downsample, NormKind norm);

  torch::Tensor forward(const torch::Tensor& x);

  ConvBlock first{nullptr};
  ConvBlock second{nullptr};
};
TORCH_MODULE(ScaleBlock);

/// Throws DimensionError unless `x` is 4-D with `channels` channels.
void require_feature_map(const torch::Tensor& x, std::int64_t channels, const char* what);

}  // namespace unisyn
