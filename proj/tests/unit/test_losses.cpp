#include "unit.hpp"

#include "gradcheck.hpp"
#include "unisyn/errors.hpp"
#include "unisyn/losses.hpp"

using namespace unisyn;

namespace {

std::vector<torch::Tensor> constant_scores(int modalities, double value) {
  return std::vector<torch::Tensor>(static_cast<std::size_t>(modalities), torch::full({2, 1, 3, 3}, value));
}

}  // namespace

TEST_CASE("synthesis loss") {
  auto y = torch::rand({2, 2, 4, 4});
  auto ac = AvailabilityCondition::parse("10");
  CHECK(synthesis_loss(y, y, ac).item<double>() == 0.0);
  CHECK(synthesis_loss(y + 1, y, AvailabilityCondition::parse("11")).item<double>() == 0.0);
  auto out = y.clone();
  out.select(1, 1).add_(0.3);
  out.select(1, 0).add_(5.0);
  CHECK(synthesis_loss(out, y, ac).item<double>() == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(synthesis_loss(out, y, ac, Reduction::kSum).item<double>() == doctest::Approx(0.3 * 32).epsilon(1e-5));
}

TEST_CASE("reconstruction loss") {
  auto y = torch::rand({2, 2, 4, 4});
  auto ac = AvailabilityCondition::parse("10");
  CHECK(reconstruction_loss(y + 1, y, AvailabilityCondition::parse("00")).item<double>() == 0.0);
  CHECK(reconstruction_loss(y, y, ac).item<double>() == 0.0);
  auto out = y.clone();
  out.select(1, 0).sub_(0.2);
  out.select(1, 1).add_(7.0);
  CHECK(reconstruction_loss(out, y, ac).item<double>() == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("masked L1 terms partition the full sum") {
  torch::manual_seed(0);
  auto zeros = AvailabilityCondition(std::vector<std::uint8_t>(4, 0));
  auto ones = AvailabilityCondition::all_available(4);
  for (int i = 0; i < 50; ++i) {
    auto out = torch::randn({2, 4, 3, 3}, torch::kFloat64);
    auto y = torch::randn({2, 4, 3, 3}, torch::kFloat64);
    auto ac = AvailabilityCondition::parse(i % 2 ? "1010" : "0111");
    const double sum = synthesis_loss(out, y, ac).item<double>() + reconstruction_loss(out, y, ac).item<double>();
    CHECK(sum == doctest::Approx(synthesis_loss(out, y, zeros).item<double>()).epsilon(1e-12));
    CHECK(sum == doctest::Approx(reconstruction_loss(out, y, ones).item<double>()).epsilon(1e-12));
  }
}

TEST_CASE("generator adversarial loss") {
  auto ac = AvailabilityCondition::parse("1011");
  CHECK(generator_adversarial_loss(constant_scores(4, 1.0), constant_scores(4, 0.0), ac).item<double>() == 0.0);
  CHECK(generator_adversarial_loss(constant_scores(4, 0.0), constant_scores(4, 0.0), ac).item<double>() == 1.0);
  CHECK(generator_adversarial_loss(constant_scores(4, 0.0), constant_scores(4, 0.0),
                                   AvailabilityCondition::all_available(4))
            .item<double>() == 0.0);
  // Two missing modalities add up.
  CHECK(generator_adversarial_loss(constant_scores(4, 0.0), constant_scores(4, 0.5),
                                   AvailabilityCondition::parse("1001"))
            .item<double>() == doctest::Approx(2 * (1.0 + 0.25)));
}

TEST_CASE("discriminator loss") {
  auto ac = AvailabilityCondition::parse("0111");
  CHECK(discriminator_loss(constant_scores(4, 0.0), constant_scores(4, 1.0), ac).item<double>() == 0.0);
  CHECK(discriminator_loss(constant_scores(4, 1.0), constant_scores(4, 1.0), ac).item<double>() == 1.0);
  CHECK(discriminator_loss(constant_scores(4, 1.0), constant_scores(4, 0.0),
                           AvailabilityCondition::all_available(4))
            .item<double>() == 0.0);
}

TEST_CASE("weighted total") {
  LossWeights w;
  CHECK(total_generator_loss(0.1, 0.2, 0.5, w) == doctest::Approx(16.5).epsilon(1e-12));
  CHECK(total_generator_loss(0.0, 0.0, 0.0, w) == 0.0);
  CHECK(total_generator_loss(0.1, 0.2, 0.5, LossWeights{1, 0, 0}) == 0.1);
  auto t = total_generator_loss(torch::tensor(0.1, torch::kFloat64), torch::tensor(0.2, torch::kFloat64),
                                torch::tensor(0.5, torch::kFloat64), w);
  CHECK(t.item<double>() == doctest::Approx(16.5).epsilon(1e-12));
  CHECK_THROWS_AS((LossWeights{-1, 0, 0}).validate(), ConfigError);
}

TEST_CASE("losses are non-negative") {
  torch::manual_seed(1);
  for (int i = 0; i < 20; ++i) {
    auto ac = AvailabilityCondition::parse("0110");
    auto out = torch::randn({1, 4, 3, 3}), y = torch::randn({1, 4, 3, 3});
    std::vector<torch::Tensor> fake, real;
    for (int m = 0; m < 4; ++m) {
      fake.push_back(torch::randn({1, 1, 2, 2}));
      real.push_back(torch::randn({1, 1, 2, 2}));
    }
    CHECK(synthesis_loss(out, y, ac).item<float>() >= 0.0f);
    CHECK(reconstruction_loss(out, y, ac).item<float>() >= 0.0f);
    CHECK(generator_adversarial_loss(fake, real, ac).item<float>() >= 0.0f);
    CHECK(discriminator_loss(fake, real, ac).item<float>() >= 0.0f);
  }
}

TEST_CASE("loss gradients match finite differences") {
  torch::manual_seed(2);
  const auto ac = AvailabilityCondition::parse("101");
  auto target = torch::randn({1, 3, 4, 4}, torch::kFloat64);
  auto output = torch::randn({1, 3, 4, 4}, torch::kFloat64);
  auto check = [](const unisyn::testing::GradcheckResult& r) {
    INFO("worst element " << r.worst);
    CHECK(r.max_relative_error < 1e-4);
  };
  check(unisyn::testing::gradcheck([&](const auto& xs) { return synthesis_loss(xs[0], target, ac); }, {output}));
  check(unisyn::testing::gradcheck([&](const auto& xs) { return reconstruction_loss(xs[0], target, ac); },
                                   {output}));
  auto scores = [](const std::vector<torch::Tensor>& xs) {
    return std::vector<torch::Tensor>{xs[0], xs[1], xs[2]};
  };
  std::vector<torch::Tensor> fake, real;
  for (int m = 0; m < 3; ++m) {
    fake.push_back(torch::randn({1, 1, 3, 3}, torch::kFloat64));
    real.push_back(torch::randn({1, 1, 3, 3}, torch::kFloat64));
  }
  std::vector<torch::Tensor> all = fake;
  all.insert(all.end(), real.begin(), real.end());
  auto split = [&](const std::vector<torch::Tensor>& xs, int offset) {
    return scores({xs[offset], xs[offset + 1], xs[offset + 2]});
  };
  check(unisyn::testing::gradcheck(
      [&](const auto& xs) { return generator_adversarial_loss(split(xs, 0), split(xs, 3), ac); }, all));
  check(unisyn::testing::gradcheck(
      [&](const auto& xs) { return discriminator_loss(split(xs, 0), split(xs, 3), ac); }, all));
  check(unisyn::testing::gradcheck(
      [&](const auto& xs) { return total_generator_loss(xs[0].sum(), xs[1].sum(), xs[2].sum(), LossWeights{}); },
      {torch::randn({2}, torch::kFloat64), torch::randn({2}, torch::kFloat64), torch::randn({2}, torch::kFloat64)}));
}

TEST_CASE("the real-score term is constant for the generator") {
  // The generator reaches the loss only through the fake scores, and the
  // gradient there does not depend on the real scores.
  torch::manual_seed(3);
  auto ac = AvailabilityCondition::parse("10");
  auto fake = torch::randn({1, 1, 2, 2}, torch::kFloat64).requires_grad_(true);
  auto grad_with = [&](const torch::Tensor& real) {
    std::vector<torch::Tensor> f{torch::Tensor(), fake};
    std::vector<torch::Tensor> r{torch::Tensor(), real};
    return torch::autograd::grad({generator_adversarial_loss(f, r, ac)}, {fake})[0];
  };
  CHECK(torch::equal(grad_with(torch::zeros({1, 1, 2, 2}, torch::kFloat64)),
                     grad_with(torch::randn({1, 1, 2, 2}, torch::kFloat64) * 10)));
}
