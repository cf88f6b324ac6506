#include "unisyn/encoder.hpp"

#include <numeric>

#include "unisyn/errors.hpp"

namespace unisyn {

EncoderVariant parse_encoder_variant(const std::string& name) {
  if (name == "cds") return EncoderVariant::kCds;
  if (name == "mms") return EncoderVariant::kMms;
  if (name == "common" || name == "c") return EncoderVariant::kCommon;
  throw ConfigError("unknown encoder variant '" + name + "' (cds|mms|common)");
}

std::string to_string(EncoderVariant variant) {
  switch (variant) {
    case EncoderVariant::kCds: return "cds";
    case EncoderVariant::kMms: return "mms";
    case EncoderVariant::kCommon: return "common";
  }
  return "?";
}

std::vector<torch::Tensor> ModalityFeatureSet::scale(int s) const {
  std::vector<torch::Tensor> out;
  out.reserve(features.size());
  for (const auto& pyramid : features) out.push_back(pyramid.at(static_cast<std::size_t>(s)));
  return out;
}

torch::Tensor fuse_common_specific(const torch::Tensor& specific, const torch::Tensor& common,
                                   torch::nn::Conv2d& mix) {
  if (specific.dim() != 4 || common.dim() != 4 || specific.size(0) != common.size(0) ||
      specific.size(2) != common.size(2) || specific.size(3) != common.size(3)) {
    throw DimensionError("fuse_common_specific: specific and common maps differ in batch/spatial size");
  }
  const auto in_channels = mix->options.in_channels();
  if (specific.size(1) + common.size(1) != in_channels) {
    throw DimensionError("fuse_common_specific: " + std::to_string(specific.size(1)) + " + " +
                         std::to_string(common.size(1)) + " channels, mixer expects " +
                         std::to_string(in_channels));
  }
  return mix->forward(torch::cat({specific, common}, 1));
}

EncoderImpl::EncoderImpl(EncoderOptions options) : options_(std::move(options)) {
  if (options_.modalities < 2) throw ConfigError("encoder needs at least 2 modalities");
  if (options_.widths.empty()) throw ConfigError("encoder needs at least one scale");
  const int scales = options_.scales();
  auto in_width = [&](int s) { return s == 0 ? std::int64_t{1} : options_.widths[s - 1]; };

  if (has_specific_streams()) {
    std::vector<ScaleBlock> shared;
    for (int s = options_.first_shared_scale; s < scales; ++s) {
      shared.push_back(register_module("shared_specific_" + std::to_string(s),
                                       ScaleBlock(in_width(s), options_.widths[s], s > 0, options_.norm)));
    }
    specific_.resize(static_cast<std::size_t>(options_.modalities));
    for (int m = 0; m < options_.modalities; ++m) {
      for (int s = 0; s < scales; ++s) {
        if (s >= options_.first_shared_scale) {
          specific_[m].push_back(shared[static_cast<std::size_t>(s - options_.first_shared_scale)]);
        } else {
          specific_[m].push_back(register_module(
              "specific_" + std::to_string(m) + "_" + std::to_string(s),
              ScaleBlock(in_width(s), options_.widths[s], s > 0, options_.norm)));
        }
      }
    }
  }
  if (has_common_stream()) {
    for (int s = 0; s < scales; ++s) {
      common_.push_back(register_module("common_" + std::to_string(s),
                                        ScaleBlock(in_width(s), options_.widths[s], s > 0, options_.norm)));
    }
  }
  if (options_.variant == EncoderVariant::kCds) {
    for (int s = 0; s < scales; ++s) {
      const auto w = options_.widths[s];
      fusion_.push_back(register_module("fusion_" + std::to_string(s),
                                        torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * w, w, 1))));
    }
  }
}

ScaleBlock& EncoderImpl::specific_block(int modality, int scale) {
  if (!has_specific_streams()) throw MisuseError("encoder variant has no specific streams");
  return specific_.at(static_cast<std::size_t>(modality)).at(static_cast<std::size_t>(scale));
}

ScaleBlock& EncoderImpl::common_block(int scale) {
  if (!has_common_stream()) throw MisuseError("encoder variant has no common stream");
  return common_.at(static_cast<std::size_t>(scale));
}

torch::nn::Conv2d& EncoderImpl::fusion_layer(int scale) {
  if (fusion_.empty()) throw MisuseError("only the CDS encoder has fusion layers");
  return fusion_.at(static_cast<std::size_t>(scale));
}

void EncoderImpl::check_input(const torch::Tensor& pixels) const {
  if (pixels.dim() != 4 || pixels.size(1) != options_.modalities) {
    throw DimensionError("encoder expects B x " + std::to_string(options_.modalities) + " x H x W input");
  }
  const std::int64_t factor = std::int64_t{1} << (options_.scales() - 1);
  if (pixels.size(2) % factor != 0 || pixels.size(3) % factor != 0) {
    throw DimensionError("encoder input " + std::to_string(pixels.size(2)) + "x" +
                         std::to_string(pixels.size(3)) + " is not divisible by " +
                         std::to_string(factor));
  }
}

std::vector<torch::Tensor> EncoderImpl::common_pyramid(const torch::Tensor& image) {
  std::vector<torch::Tensor> out;
  auto x = image;
  for (auto& block : common_) {
    x = block->forward(x);
    out.push_back(x);
  }
  return out;
}

ModalityFeatureSet EncoderImpl::forward(const torch::Tensor& pixels) {
  std::vector<int> all(static_cast<std::size_t>(options_.modalities));
  std::iota(all.begin(), all.end(), 0);
  return encode(pixels, all);
}

ModalityFeatureSet EncoderImpl::forward(const torch::Tensor& pixels, const AvailabilityCondition& ac) {
  if (ac.size() != options_.modalities) {
    throw DimensionError("condition has " + std::to_string(ac.size()) + " flags, encoder expects " +
                         std::to_string(options_.modalities));
  }
  ac.require_input_valid();
  return encode(pixels, ac.available_indices());
}

ModalityFeatureSet EncoderImpl::encode(const torch::Tensor& pixels, const std::vector<int>& streams) {
  check_input(pixels);
  const auto batch = pixels.size(0);
  const int scales = options_.scales();
  const auto n = static_cast<std::int64_t>(streams.size());

  auto stacked_input = [&] {
    std::vector<torch::Tensor> parts;
    for (int m : streams) parts.push_back(pixels.narrow(1, m, 1));
    return torch::cat(parts, 0);
  };

  // The common stream sees every encoded modality; run them as one batch
  // laid out stream-major.
  std::vector<std::vector<torch::Tensor>> common(streams.size());
  if (has_common_stream()) {
    for (auto& level : common_pyramid(stacked_input())) {
      auto parts = level.split(batch, 0);
      for (std::int64_t k = 0; k < n; ++k) common[k].push_back(parts[static_cast<std::size_t>(k)]);
    }
  }

  ModalityFeatureSet out;
  out.features.assign(static_cast<std::size_t>(options_.modalities),
                      std::vector<torch::Tensor>(static_cast<std::size_t>(scales)));
  if (!has_specific_streams()) {
    for (std::int64_t k = 0; k < n; ++k) out.features[streams[k]] = std::move(common[k]);
    return out;
  }

  std::vector<torch::Tensor> state(streams.size());
  for (std::int64_t k = 0; k < n; ++k) state[k] = pixels.narrow(1, streams[k], 1);

  for (int s = 0; s < scales; ++s) {
    std::vector<torch::Tensor> specific(streams.size());
    if (s >= options_.first_shared_scale) {
      auto joint = specific_[0][s]->forward(torch::cat(state, 0));
      auto parts = joint.split(batch, 0);
      for (std::int64_t k = 0; k < n; ++k) specific[k] = parts[static_cast<std::size_t>(k)];
    } else {
      for (std::int64_t k = 0; k < n; ++k) specific[k] = specific_[streams[k]][s]->forward(state[k]);
    }
    for (std::int64_t k = 0; k < n; ++k) {
      auto feature = options_.variant == EncoderVariant::kCds
                         ? fuse_common_specific(specific[k], common[k][s], fusion_[s])
                         : specific[k];
      out.features[streams[k]][s] = feature;
      state[k] = feature;
    }
  }
  return out;
}

}  // namespace unisyn
