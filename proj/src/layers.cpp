#include "unisyn/layers.hpp"

#include "unisyn/errors.hpp"

namespace unisyn {

namespace F = torch::nn::functional;

NormKind parse_norm_kind(const std::string& name) {
  if (name == "instance") return NormKind::kInstance;
  if (name == "none") return NormKind::kNone;
  throw ConfigError("unknown normalization '" + name + "' (instance|none)");
}

std::string to_string(NormKind kind) { return kind == NormKind::kInstance ? "instance" : "none"; }

ConvBlockImpl::ConvBlockImpl(std::int64_t in_channels, std::int64_t out_channels,
                             std::int64_t kernel, std::int64_t stride, NormKind norm, bool activate)
    : norm_(norm), activate_(activate) {
  const std::int64_t padding = kernel == 4 ? 1 : kernel / 2;
  conv = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                                    .stride(stride)
                                    .padding(padding)));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
  auto y = conv->forward(x);
  if (norm_ == NormKind::kInstance) y = F::instance_norm(y, F::InstanceNormFuncOptions().eps(1e-5));
  if (activate_) y = F::leaky_relu(y, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
  return y;
}

ScaleBlockImpl::ScaleBlockImpl(std::int64_t in_channels, std::int64_t out_channels, bool downsample,
                               NormKind norm) {
  first = register_module("first", ConvBlock(in_channels, out_channels, 3, downsample ? 2 : 1, norm));
  second = register_module("second", ConvBlock(out_channels, out_channels, 3, 1, norm));
}

torch::Tensor ScaleBlockImpl::forward(const torch::Tensor& x) {
  return second->forward(first->forward(x));
}

void require_feature_map(const torch::Tensor& x, std::int64_t channels, const char* what) {
  if (!x.defined() || x.dim() != 4 || x.size(1) != channels) {
    throw DimensionError(std::string(what) + ": expected B x " + std::to_string(channels) +
                         " x H x W feature map");
  }
}

}  // namespace unisyn
