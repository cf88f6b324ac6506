#pragma once

#include <torch/torch.h>

#include "unisyn/conditioning.hpp"
#include "unisyn/decoder.hpp"
#include "unisyn/encoder.hpp"
#include "unisyn/fusion.hpp"

namespace unisyn {

struct GeneratorOptions {
  EncoderOptions encoder;
  FusionOptions fusion;
  DecoderOptions decoder;
};

/// Encoder -> per-scale unification -> multi-stream decoder.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorOptions& options);

  /// `pixels` is the zero-imputed B x M x H x W input; returns all M images.
  torch::Tensor forward(const torch::Tensor& pixels, const AvailabilityCondition& ac);

  Encoder encoder{nullptr};
  FeatureUnifier unifier{nullptr};
  Decoder decoder{nullptr};
};
TORCH_MODULE(Generator);

}  // namespace unisyn
