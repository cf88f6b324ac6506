#include "unisyn/decoder.hpp"

#include "unisyn/errors.hpp"

namespace unisyn {

namespace F = torch::nn::functional;

OutputActivation parse_output_activation(const std::string& name) {
  if (name == "clamp") return OutputActivation::kClamp;
  if (name == "linear") return OutputActivation::kLinear;
  throw ConfigError("unknown output activation '" + name + "' (clamp|linear)");
}

std::string to_string(OutputActivation activation) {
  return activation == OutputActivation::kClamp ? "clamp" : "linear";
}

DecoderImpl::DecoderImpl(DecoderOptions options) : options_(std::move(options)) {
  if (options_.widths.empty()) throw ConfigError("decoder needs at least one scale");
  const int scales = static_cast<int>(options_.widths.size());
  const auto deepest = options_.widths.back();
  bottom_ = register_module("shared_bottom", ConvBlock(deepest, deepest, 3, 1, options_.norm));
  up_.resize(static_cast<std::size_t>(options_.modalities));
  merge_.resize(static_cast<std::size_t>(options_.modalities));
  for (int m = 0; m < options_.modalities; ++m) {
    const auto tag = std::to_string(m);
    for (int s = 0; s + 1 < scales; ++s) {
      const auto w = options_.widths[s];
      up_[m].push_back(register_module("up_" + tag + "_" + std::to_string(s),
                                       ConvBlock(options_.widths[s + 1], w, 3, 1, options_.norm)));
      merge_[m].push_back(register_module("merge_" + tag + "_" + std::to_string(s),
                                          ConvBlock(2 * w, w, 3, 1, options_.norm)));
    }
    head_.push_back(register_module(
        "head_" + tag, torch::nn::Conv2d(torch::nn::Conv2dOptions(options_.widths.front(), 1, 1))));
  }
}

ConvBlock& DecoderImpl::up_block(int modality, int scale) {
  return up_.at(static_cast<std::size_t>(modality)).at(static_cast<std::size_t>(scale));
}

ConvBlock& DecoderImpl::merge_block(int modality, int scale) {
  return merge_.at(static_cast<std::size_t>(modality)).at(static_cast<std::size_t>(scale));
}

void DecoderImpl::check_input(const UnifiedFeatureSet& unified) const {
  const int scales = static_cast<int>(options_.widths.size());
  if (unified.scales() != scales) {
    throw DimensionError("decoder expects " + std::to_string(scales) + " unified scales, got " +
                         std::to_string(unified.scales()));
  }
  const auto& top = unified.features.front();
  require_feature_map(top, options_.widths.front(), "decode");
  for (int s = 0; s < scales; ++s) {
    const auto& f = unified.features[s];
    require_feature_map(f, options_.widths[s], "decode");
    if (f.size(0) != top.size(0) || f.size(2) * (std::int64_t{1} << s) != top.size(2) ||
        f.size(3) * (std::int64_t{1} << s) != top.size(3)) {
      throw DimensionError("unified scale " + std::to_string(s) + " has the wrong spatial size");
    }
  }
}

torch::Tensor DecoderImpl::shared_activation(const torch::Tensor& deepest) {
  return bottom_->forward(deepest);
}

torch::Tensor DecoderImpl::decode_stream(int modality, const UnifiedFeatureSet& unified,
                                         const torch::Tensor& bottom) {
  const int scales = static_cast<int>(options_.widths.size());
  auto x = bottom;
  const auto upsample = F::InterpolateFuncOptions()
                            .scale_factor(std::vector<double>{2.0, 2.0})
                            .mode(torch::kNearest);
  for (int s = scales - 2; s >= 0; --s) {
    x = up_[modality][s]->forward(F::interpolate(x, upsample));
    x = merge_[modality][s]->forward(torch::cat({x, unified.features[s]}, 1));
  }
  auto y = head_[static_cast<std::size_t>(modality)]->forward(x);
  if (options_.output == OutputActivation::kClamp) y = y.clamp(0.0, options_.intensity_ceiling);
  return y;
}

torch::Tensor DecoderImpl::forward(const UnifiedFeatureSet& unified) {
  check_input(unified);
  // Every stream feeds the same deepest map to the shared block, so it runs once.
  const auto bottom = shared_activation(unified.features.back());
  std::vector<torch::Tensor> images;
  for (int m = 0; m < options_.modalities; ++m) images.push_back(decode_stream(m, unified, bottom));
  return torch::cat(images, 1);
}

}  // namespace unisyn
