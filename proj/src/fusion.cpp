#include "unisyn/fusion.hpp"

#include "unisyn/errors.hpp"

namespace unisyn {

namespace F = torch::nn::functional;

FusionStrategy parse_fusion_strategy(const std::string& name) {
  if (name == "dfum") return FusionStrategy::kDfum;
  if (name == "max") return FusionStrategy::kMax;
  if (name == "hemis") return FusionStrategy::kHemis;
  throw ConfigError("unknown fusion strategy '" + name + "' (dfum|max|hemis)");
}

std::string to_string(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::kDfum: return "dfum";
    case FusionStrategy::kMax: return "max";
    case FusionStrategy::kHemis: return "hemis";
  }
  return "?";
}

HardSoftCombine parse_hard_soft_combine(const std::string& name) {
  if (name == "mean") return HardSoftCombine::kMean;
  if (name == "concat") return HardSoftCombine::kConcat;
  throw ConfigError("unknown hard/soft combination '" + name + "' (mean|concat)");
}

std::string to_string(HardSoftCombine combine) {
  return combine == HardSoftCombine::kMean ? "mean" : "concat";
}

namespace {

void check_features(std::span<const torch::Tensor> features, const AvailabilityCondition& ac) {
  ac.require_input_valid();
  if (static_cast<int>(features.size()) != ac.size()) {
    throw DimensionError("got " + std::to_string(features.size()) + " feature maps for a " +
                         std::to_string(ac.size()) + "-modality condition");
  }
  const auto& ref = features[static_cast<std::size_t>(ac.available_indices().front())];
  for (int i : ac.available_indices()) {
    if (!features[static_cast<std::size_t>(i)].sizes().equals(ref.sizes())) {
      throw DimensionError("available feature maps differ in shape");
    }
  }
}

std::vector<torch::Tensor> gather_available(std::span<const torch::Tensor> features,
                                            const AvailabilityCondition& ac) {
  std::vector<torch::Tensor> out;
  for (int i : ac.available_indices()) out.push_back(features[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

torch::Tensor hard_integrate(std::span<const torch::Tensor> features, const AvailabilityCondition& ac) {
  check_features(features, ac);
  auto available = gather_available(features, ac);
  if (available.size() == 1) return available.front();
  auto result = available.front();
  for (std::size_t k = 1; k < available.size(); ++k) result = torch::maximum(result, available[k]);
  return result;
}

torch::Tensor soft_integrate(std::span<const torch::Tensor> features,
                             std::span<const torch::Tensor> gates, const AvailabilityCondition& ac) {
  check_features(features, ac);
  if (gates.size() != features.size()) throw DimensionError("one gate map per modality required");
  torch::Tensor sum;
  for (int i : ac.available_indices()) {
    const auto& f = features[static_cast<std::size_t>(i)];
    const auto& g = gates[static_cast<std::size_t>(i)];
    if (g.dim() != 4 || g.size(0) != f.size(0) || g.size(1) != 1 || g.size(2) != f.size(2) ||
        g.size(3) != f.size(3)) {
      throw DimensionError("gate map must be B x 1 x H x W matching its feature map");
    }
    auto term = g * f;
    sum = sum.defined() ? sum + term : term;
  }
  return sum;
}

AttentionBlockImpl::AttentionBlockImpl(std::int64_t channels, std::int64_t branch_width) {
  auto conv = [&](std::int64_t k) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, branch_width, k).padding(k / 2));
  };
  branch3 = register_module("branch3", conv(3));
  branch5 = register_module("branch5", conv(5));
  branch7 = register_module("branch7", conv(7));
  reduce = register_module("reduce", torch::nn::Conv2d(torch::nn::Conv2dOptions(3 * branch_width, 1, 1)));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
  const auto act = F::LeakyReLUFuncOptions().negative_slope(kLeakySlope);
  auto branches = torch::cat({F::leaky_relu(branch3->forward(x), act),
                              F::leaky_relu(branch5->forward(x), act),
                              F::leaky_relu(branch7->forward(x), act)},
                             1);
  return reduce->forward(branches);
}

ScaleUnifierImpl::ScaleUnifierImpl(const FusionOptions& options, std::int64_t channels)
    : options_(options), channels_(channels) {
  switch (options_.strategy) {
    case FusionStrategy::kDfum:
      for (int m = 0; m < options_.modalities; ++m) {
        attention_.push_back(register_module("attention_" + std::to_string(m),
                                             AttentionBlock(channels, options_.attention_width)));
      }
      if (options_.combine == HardSoftCombine::kConcat) {
        combine_mix_ = register_module(
            "combine_mix", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * channels, channels, 1)));
      }
      break;
    case FusionStrategy::kHemis:
      hemis_mix_ = register_module(
          "hemis_mix", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * channels, channels, 1)));
      break;
    case FusionStrategy::kMax:
      break;
  }
}

AttentionBlock& ScaleUnifierImpl::attention(int modality) {
  if (attention_.empty()) throw MisuseError("attention exists only for the DFUM strategy");
  return attention_.at(static_cast<std::size_t>(modality));
}

std::vector<torch::Tensor> ScaleUnifierImpl::compute_attention(std::span<const torch::Tensor> features,
                                                               const AvailabilityCondition& ac) {
  if (options_.strategy != FusionStrategy::kDfum) {
    throw MisuseError("compute_attention requires the DFUM strategy");
  }
  check_features(features, ac);
  const auto& ref = features[static_cast<std::size_t>(ac.available_indices().front())];
  require_feature_map(ref, channels_, "compute_attention");
  std::vector<torch::Tensor> gates(features.size());
  for (int i = 0; i < ac.size(); ++i) {
    if (ac.available(i)) {
      gates[i] = torch::sigmoid(attention_[static_cast<std::size_t>(i)]->forward(features[i]));
    } else {
      gates[i] = torch::zeros({ref.size(0), 1, ref.size(2), ref.size(3)}, ref.options());
    }
  }
  if (options_.normalize_gates) {
    torch::Tensor total;
    for (int i : ac.available_indices()) total = total.defined() ? total + gates[i] : gates[i];
    for (int i : ac.available_indices()) gates[i] = gates[i] / total;
  }
  return gates;
}

torch::Tensor ScaleUnifierImpl::hemis(std::span<const torch::Tensor> features,
                                      const AvailabilityCondition& ac) {
  auto stacked = torch::stack(gather_available(features, ac), 0);
  auto mean = stacked.mean(0);
  // Population variance over the available modalities; 0 for a single one.
  auto variance = (stacked - mean.unsqueeze(0)).pow(2).mean(0);
  return hemis_mix_->forward(torch::cat({mean, variance}, 1));
}

torch::Tensor ScaleUnifierImpl::forward(std::span<const torch::Tensor> features,
                                        const AvailabilityCondition& ac) {
  check_features(features, ac);
  require_feature_map(features[static_cast<std::size_t>(ac.available_indices().front())], channels_,
                      "unify");
  switch (options_.strategy) {
    case FusionStrategy::kMax:
      return hard_integrate(features, ac);
    case FusionStrategy::kHemis:
      return hemis(features, ac);
    case FusionStrategy::kDfum: {
      auto hard = hard_integrate(features, ac);
      auto gates = compute_attention(features, ac);
      auto soft = soft_integrate(features, gates, ac);
      if (options_.combine == HardSoftCombine::kConcat) {
        return combine_mix_->forward(torch::cat({hard, soft}, 1));
      }
      return 0.5 * (hard + soft);
    }
  }
  throw MisuseError("unknown fusion strategy");
}

FeatureUnifierImpl::FeatureUnifierImpl(FusionOptions options) : options_(std::move(options)) {
  for (std::size_t s = 0; s < options_.widths.size(); ++s) {
    scales_.push_back(register_module("scale_" + std::to_string(s),
                                      ScaleUnifier(options_, options_.widths[s])));
  }
}

UnifiedFeatureSet FeatureUnifierImpl::forward(const ModalityFeatureSet& features,
                                              const AvailabilityCondition& ac) {
  if (features.scales() != static_cast<int>(scales_.size())) {
    throw DimensionError("feature pyramid has " + std::to_string(features.scales()) +
                         " scales, unifier expects " + std::to_string(scales_.size()));
  }
  UnifiedFeatureSet out;
  for (int s = 0; s < features.scales(); ++s) {
    const auto maps = features.scale(s);
    out.features.push_back(scales_[static_cast<std::size_t>(s)]->forward(maps, ac));
  }
  return out;
}

}  // namespace unisyn
