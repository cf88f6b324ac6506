#include "unisyn/discriminator.hpp"

#include <stdexcept>

#include "unisyn/errors.hpp"

namespace unisyn {

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscriminatorOptions& options) {
  if (options.widths.empty()) throw ConfigError("discriminator needs at least one block");
  std::int64_t in = 1;
  for (std::size_t j = 0; j < options.widths.size(); ++j) {
    const auto stride = static_cast<int>(j) < options.strided_blocks ? 2 : 1;
    blocks.push_back(register_module(
        "block_" + std::to_string(j),
        ConvBlock(in, options.widths[j], 4, stride, j == 0 ? NormKind::kNone : options.norm)));
    in = options.widths[j];
  }
  head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, 4).padding(1)));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& image) {
  require_feature_map(image, 1, "discriminate");
  auto x = image;
  for (auto& b : blocks) x = b->forward(x);
  return head->forward(x);
}

DiscriminatorSetImpl::DiscriminatorSetImpl(DiscriminatorOptions options) : options_(std::move(options)) {
  for (int m = 0; m < options_.modalities; ++m) {
    discriminators_.push_back(
        register_module("dis_" + std::to_string(m), PatchDiscriminator(options_)));
  }
}

PatchDiscriminator& DiscriminatorSetImpl::at(int modality) {
  if (modality < 0 || modality >= modalities()) {
    throw std::out_of_range("discriminator index " + std::to_string(modality) + " outside [0, " +
                            std::to_string(modalities()) + ")");
  }
  return discriminators_[static_cast<std::size_t>(modality)];
}

torch::Tensor DiscriminatorSetImpl::discriminate(const torch::Tensor& image, int modality) {
  return at(modality)->forward(image);
}

std::int64_t DiscriminatorSetImpl::score_size(std::int64_t size) const {
  // k=4, p=1: stride 2 -> floor(n/2), stride 1 -> n - 1.
  for (std::size_t j = 0; j < options_.widths.size(); ++j)
    size = static_cast<int>(j) < options_.strided_blocks ? (size + 2 - 4) / 2 + 1 : size - 1;
  return size - 1;
}

}  // namespace unisyn
