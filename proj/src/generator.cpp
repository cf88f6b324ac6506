#include "unisyn/generator.hpp"

#include "unisyn/errors.hpp"

namespace unisyn {

GeneratorImpl::GeneratorImpl(const GeneratorOptions& options) {
  if (options.encoder.widths != options.fusion.widths || options.encoder.widths != options.decoder.widths ||
      options.encoder.modalities != options.fusion.modalities ||
      options.encoder.modalities != options.decoder.modalities) {
    throw ConfigError("encoder, fusion and decoder must agree on modalities and widths");
  }
  encoder = register_module("encoder", Encoder(options.encoder));
  unifier = register_module("unifier", FeatureUnifier(options.fusion));
  decoder = register_module("decoder", Decoder(options.decoder));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& pixels, const AvailabilityCondition& ac) {
  ac.require_input_valid();
  if (ac.size() != encoder->options().modalities) {
    throw DimensionError("condition has " + std::to_string(ac.size()) + " flags, generator expects " +
                         std::to_string(encoder->options().modalities));
  }
  return decoder->forward(unifier->forward(encoder->forward(pixels, ac), ac));
}

}  // namespace unisyn
