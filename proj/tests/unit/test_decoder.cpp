#include "unit.hpp"

#include "gradcheck.hpp"
#include "unisyn/decoder.hpp"
#include "unisyn/errors.hpp"
#include "unisyn/fusion.hpp"
#include "unisyn/optim.hpp"

using namespace unisyn;

namespace {

DecoderOptions small() {
  DecoderOptions o;
  o.modalities = 3;
  o.widths = {4, 6, 8, 8, 8};
  return o;
}

UnifiedFeatureSet random_pyramid(const DecoderOptions& o, std::int64_t size,
                                 torch::ScalarType dtype = torch::kFloat32) {
  UnifiedFeatureSet u;
  for (std::size_t s = 0; s < o.widths.size(); ++s) {
    u.features.push_back(torch::randn({2, o.widths[s], size >> s, size >> s}, dtype));
  }
  return u;
}

}  // namespace

TEST_CASE("decoder restores full resolution for every modality") {
  torch::manual_seed(0);
  Decoder decoder(DecoderOptions{});
  auto u = random_pyramid(DecoderOptions{}, 64);
  auto out = decoder->forward(u);
  CHECK(out.sizes() == torch::IntArrayRef({2, 4, 64, 64}));
  CHECK(torch::isfinite(out).all().item<bool>());
  CHECK(out.min().item<float>() >= 0.0f);
  CHECK(out.max().item<float>() <= 8.0f);
  CHECK(torch::equal(out, decoder->forward(u)));
  u.features.pop_back();
  CHECK_THROWS_AS(decoder->forward(u), DimensionError);
}

TEST_CASE("shared deep block is common to every stream") {
  torch::manual_seed(1);
  Decoder decoder(small());
  auto u = random_pyramid(small(), 32);
  auto bottom = decoder->shared_activation(u.features.back());
  auto out = decoder->forward(u);
  for (int m = 0; m < 3; ++m) {
    CHECK(torch::allclose(decoder->decode_stream(m, u, bottom), out.narrow(1, m, 1)));
  }
  // One module, so one set of parameters no matter which stream updates it.
  Optimizer opt(named_parameters(*decoder), OptimizerOptions{});
  out.narrow(1, 1, 1).sum().backward();
  auto before = decoder->bottom_block()->conv->weight.clone();
  opt.step(0.5);
  CHECK_FALSE(torch::equal(before, decoder->bottom_block()->conv->weight));
  int bottoms = 0;
  for (const auto& item : decoder->named_parameters()) bottoms += item.key().rfind("shared_bottom", 0) == 0;
  CHECK(bottoms == 2);
}

TEST_CASE("every unified scale influences the output") {
  torch::manual_seed(2);
  auto o = small();
  o.output = OutputActivation::kLinear;
  Decoder decoder(o);
  decoder->to(torch::kFloat64);
  auto u = random_pyramid(o, 32, torch::kFloat64);
  for (auto& f : u.features) f.requires_grad_(true);
  decoder->forward(u).pow(2).sum().backward();
  for (const auto& f : u.features) CHECK(f.grad().abs().sum().item<double>() > 0.0);
}

TEST_CASE("decoder block gradients match finite differences") {
  torch::manual_seed(3);
  ConvBlock up(3, 2, 3, 1, NormKind::kInstance);
  ConvBlock merge(4, 2, 3, 1, NormKind::kInstance);
  up->to(torch::kFloat64);
  merge->to(torch::kFloat64);
  torch::nn::Sequential both(up, merge);
  auto weights = torch::randn({1, 2, 4, 4}, torch::kFloat64);
  auto f = [&](const std::vector<torch::Tensor>& xs) {
    auto upsampled = torch::upsample_nearest2d(xs[0], {4, 4});
    auto y = merge->forward(torch::cat({up->forward(upsampled), xs[1]}, 1));
    return (y * weights).sum();
  };
  auto r = unisyn::testing::gradcheck_module(
      *both, f, {torch::randn({1, 3, 2, 2}, torch::kFloat64), torch::randn({1, 2, 4, 4}, torch::kFloat64)});
  INFO("worst element " << r.worst);
  CHECK(r.max_relative_error < 1e-4);
}
