#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "unisyn/fusion.hpp"
#include "unisyn/layers.hpp"

namespace unisyn {

enum class OutputActivation { kClamp, kLinear };

OutputActivation parse_output_activation(const std::string& name);
std::string to_string(OutputActivation activation);

struct DecoderOptions {
  int modalities = 4;
  std::vector<std::int64_t> widths{32, 64, 128, 256, 512};
  NormKind norm = NormKind::kInstance;
  OutputActivation output = OutputActivation::kClamp;
  /// Upper bound of the clamp output activation.
  double intensity_ceiling = 8.0;
};

/// Stream i turns the unified pyramid into modality i. The deepest block is
/// one module shared by every stream.
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(DecoderOptions options);

  /// Returns B x M x H x W.
  torch::Tensor forward(const UnifiedFeatureSet& unified);

  /// Output of the shared deepest block for the given deepest unified map.
  torch::Tensor shared_activation(const torch::Tensor& deepest);
  /// Image of a single stream, B x 1 x H x W.
  torch::Tensor decode_stream(int modality, const UnifiedFeatureSet& unified,
                              const torch::Tensor& bottom);

  ConvBlock& bottom_block() { return bottom_; }
  ConvBlock& up_block(int modality, int scale);
  ConvBlock& merge_block(int modality, int scale);
  const DecoderOptions& options() const noexcept { return options_; }

 private:
  void check_input(const UnifiedFeatureSet& unified) const;

  DecoderOptions options_;
  ConvBlock bottom_{nullptr};
  std::vector<std::vector<ConvBlock>> up_;     // [modality][scale], scale < scales-1
  std::vector<std::vector<ConvBlock>> merge_;  // [modality][scale]
  std::vector<torch::nn::Conv2d> head_;
};
TORCH_MODULE(Decoder);

}  // namespace unisyn
