#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/conditioning.hpp"
#include "unisyn/layers.hpp"

namespace unisyn {

/// CDS: modality-specific streams fused with a common stream at each scale.
/// MMS: modality-specific streams only. Common: one stream shared by all
/// modalities.
enum class EncoderVariant { kCds, kMms, kCommon };

EncoderVariant parse_encoder_variant(const std::string& name);
std::string to_string(EncoderVariant variant);

struct EncoderOptions {
  int modalities = 4;
  std::vector<std::int64_t> widths{32, 64, 128, 256, 512};
  EncoderVariant variant = EncoderVariant::kCds;
  NormKind norm = NormKind::kInstance;
  /// 0-based scale from which the specific streams share one parameter block.
  int first_shared_scale = 3;

  int scales() const noexcept { return static_cast<int>(widths.size()); }
};

/// Per-modality multi-scale features; scale s has spatial size input / 2^s.
struct ModalityFeatureSet {
  std::vector<std::vector<torch::Tensor>> features;  // [modality][scale]

  int modalities() const noexcept { return static_cast<int>(features.size()); }
  int scales() const noexcept { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
  const torch::Tensor& at(int modality, int scale) const {
    return features.at(static_cast<std::size_t>(modality)).at(static_cast<std::size_t>(scale));
  }
  /// The M maps of one scale.
  std::vector<torch::Tensor> scale(int s) const;
};

/// Concatenate specific and common features along channels and mix them with
/// a 1x1 convolution.
torch::Tensor fuse_common_specific(const torch::Tensor& specific, const torch::Tensor& common,
                                   torch::nn::Conv2d& mix);

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(EncoderOptions options);

  /// `pixels` is B x M x H x W (zero-imputed). H and W must be divisible by
  /// 2^(scales-1).
  ModalityFeatureSet forward(const torch::Tensor& pixels);
  /// Encodes only the available modalities; entries of missing ones are left
  /// undefined since unification never reads them.
  ModalityFeatureSet forward(const torch::Tensor& pixels, const AvailabilityCondition& ac);

  /// Pre-fusion activations of the common stream for a B x 1 x H x W image.
  std::vector<torch::Tensor> common_pyramid(const torch::Tensor& image);

  const EncoderOptions& options() const noexcept { return options_; }
  bool has_common_stream() const noexcept { return options_.variant != EncoderVariant::kMms; }
  bool has_specific_streams() const noexcept { return options_.variant != EncoderVariant::kCommon; }
  ScaleBlock& specific_block(int modality, int scale);
  ScaleBlock& common_block(int scale);
  torch::nn::Conv2d& fusion_layer(int scale);

 private:
  void check_input(const torch::Tensor& pixels) const;
  ModalityFeatureSet encode(const torch::Tensor& pixels, const std::vector<int>& streams);

  EncoderOptions options_;
  std::vector<std::vector<ScaleBlock>> specific_;  // [modality][scale], deep scales aliased
  std::vector<ScaleBlock> common_;
  std::vector<torch::nn::Conv2d> fusion_;
};
TORCH_MODULE(Encoder);

}  // namespace unisyn
