#include "unit.hpp"

#include <fstream>

#include "tempdir.hpp"
#include "tiny.hpp"
#include "unisyn/checkpoint.hpp"
#include "unisyn/errors.hpp"
#include "unisyn/training.hpp"

using namespace unisyn;
using unisyn::testing::TempDir;
using unisyn::testing::tiny_config;
using unisyn::testing::tiny_slices;

namespace {

bool same_parameters(torch::nn::Module& a, torch::nn::Module& b) {
  auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!torch::equal(pa[i], pb[i])) return false;
  return true;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool equals_snapshot(torch::nn::Module& m, const std::vector<torch::Tensor>& s) {
  auto ps = m.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (!torch::equal(ps[i], s[i])) return false;
  return true;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("learning rate schedule") {
    ExperimentConfig c;
    CHECK(lr_at_epoch(10, c) == 2e-4);
    CHECK(lr_at_epoch(49, c) == 2e-4);
    CHECK(lr_at_epoch(125, c) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(std::abs(lr_at_epoch(199, c) - 2e-4 / 150) < 1e-12);
    CHECK(lr_at_epoch(200, c) == 0.0);
    CHECK_THROWS_AS(lr_at_epoch(-1, c), ConfigError);
    CHECK_THROWS_AS(lr_at_epoch(201, c), ConfigError);
  }

  TEST_CASE("condition rule honours the curriculum switch") {
    ExperimentConfig c;
    CHECK(condition_rule(3, c) == MissingCountRule::fixed(1));
    c.curriculum_enabled = false;
    CHECK(condition_rule(3, c) == MissingCountRule::uniform_count());
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("SGD step is p - lr * g") {
    auto p = torch::tensor({1.0, -2.0}, torch::kFloat64).requires_grad_(true);
    Optimizer opt({{"p", p}}, OptimizerOptions{});
    (p * torch::tensor({3.0, 0.5}, torch::kFloat64)).sum().backward();
    opt.step(0.1);
    CHECK(p[0].item<double>() == doctest::Approx(1.0 - 0.3));
    CHECK(p[1].item<double>() == doctest::Approx(-2.0 - 0.05));
  }

  TEST_CASE("SGD momentum accumulates") {
    auto p = torch::tensor({0.0}, torch::kFloat64).requires_grad_(true);
    OptimizerOptions o;
    o.momentum = 0.9;
    Optimizer opt({{"p", p}}, o);
    for (int i = 0; i < 2; ++i) {
      opt.zero_grad();
      (p * 1.0).sum().backward();
      opt.step(1.0);
    }
    // v1 = 1, v2 = 0.9 + 1 = 1.9; p = -(1 + 1.9).
    CHECK(p.item<double>() == doctest::Approx(-2.9));
  }

  TEST_CASE("Adam first step has magnitude lr") {
    auto p = torch::tensor({1.0, 1.0}, torch::kFloat64).requires_grad_(true);
    OptimizerOptions o;
    o.kind = OptimizerKind::kAdam;
    Optimizer opt({{"p", p}}, o);
    (p * torch::tensor({5.0, -0.01}, torch::kFloat64)).sum().backward();
    opt.step(0.01);
    CHECK(p[0].item<double>() == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p[1].item<double>() == doctest::Approx(1.01).epsilon(1e-5));
  }

  TEST_CASE("parameters without gradient are skipped and state round-trips") {
    auto a = torch::ones({2}).requires_grad_(true);
    auto b = torch::ones({2}).requires_grad_(true);
    OptimizerOptions o;
    o.kind = OptimizerKind::kAdam;
    Optimizer opt({{"a", a}, {"b", b}}, o);
    (a * 2).sum().backward();
    opt.step(0.1);
    CHECK(torch::equal(b, torch::ones({2})));
    auto state = opt.state();
    std::map<std::string, torch::Tensor> m(state.begin(), state.end());
    CHECK(m.count("a/steps") == 1);
    CHECK(m.at("a/steps").item<std::int64_t>() == 1);
    Optimizer other({{"a", a}, {"b", b}}, o);
    other.load_state(m);
    auto again = other.state();
    REQUIRE(again.size() == state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
      CHECK(again[i].first == state[i].first);
      CHECK(torch::equal(again[i].second, state[i].second));
    }
    m["zzz/steps"] = torch::zeros({1});
    CHECK_THROWS_AS(other.load_state(m), ConfigError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("file round trip and corruption") {
    TempDir dir("ck");
    CheckpointData d;
    d.config_json = "{}";
    d.config_hash = 42;
    d.epoch = 3;
    d.iteration = 17;
    d.rng_state = "1 2 3";
    d.tensors = {{"f", torch::rand({2, 3})},
                 {"d", torch::rand({4}, torch::kFloat64)},
                 {"i", torch::tensor({int64_t{7}, int64_t{-9}})}};
    write_checkpoint(d, dir / "a.ckpt");
    auto back = read_checkpoint(dir / "a.ckpt");
    CHECK(back.config_json == "{}");
    CHECK(back.config_hash == 42);
    CHECK(back.epoch == 3);
    CHECK(back.iteration == 17);
    CHECK(back.rng_state == "1 2 3");
    REQUIRE(back.tensors.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.tensors[i].first == d.tensors[i].first);
      CHECK(torch::equal(back.tensors[i].second, d.tensors[i].second));
    }

    // Flip one payload byte.
    {
      std::fstream f(dir / "a.ckpt", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(40);
      char c = 0;
      f.read(&c, 1);
      f.seekp(40);
      c = static_cast<char>(c ^ 0x5a);
      f.write(&c, 1);
    }
    CHECK_THROWS_AS(read_checkpoint(dir / "a.ckpt"), IntegrityError);

    write_checkpoint(d, dir / "b.ckpt");
    {
      std::fstream f(dir / "b.ckpt", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(8);
      const std::uint32_t version = 99;
      f.write(reinterpret_cast<const char*>(&version), 4);
    }
    CHECK_THROWS_AS(read_checkpoint(dir / "b.ckpt"), UnsupportedFormatError);

    std::ofstream(dir / "c.ckpt") << "not a checkpoint";
    CHECK_THROWS_AS(read_checkpoint(dir / "c.ckpt"), IntegrityError);
  }

  TEST_CASE("trainer state survives save and load") {
    TempDir dir("ck");
    Trainer t(tiny_config());
    auto data = tiny_slices(1, 4);
    t.training_step(data.slices, AvailabilityCondition::parse("1101"), 1e-3);
    t.save_checkpoint(dir / "t.ckpt");
    auto loaded = Trainer::from_checkpoint(dir / "t.ckpt");
    CHECK(same_parameters(*t.generator(), *loaded.generator()));
    CHECK(same_parameters(*t.discriminators(), *loaded.discriminators()));
    CHECK(loaded.iteration() == t.iteration());

    // Zero-lr step leaves parameters as loaded.
    auto before = snapshot(*loaded.generator());
    auto record = loaded.training_step(data.slices, AvailabilityCondition::parse("0111"), 0.0);
    CHECK(equals_snapshot(*loaded.generator(), before));
    CHECK(record.generator_total > 0.0);

    // Aliased deep blocks remain one storage: an update through modality 1
    // shows up for modality 2.
    auto& enc = loaded.generator()->encoder;
    CHECK(enc->specific_block(0, 4).ptr() == enc->specific_block(1, 4).ptr());
    auto w = enc->specific_block(1, 4)->first->conv->weight.detach().clone();
    loaded.training_step(data.slices, AvailabilityCondition::parse("0111"), 1e-2);
    CHECK_FALSE(torch::equal(enc->specific_block(1, 4)->first->conv->weight, w));
    CHECK(torch::equal(enc->specific_block(0, 4)->first->conv->weight,
                       enc->specific_block(1, 4)->first->conv->weight));
  }

  TEST_CASE("config hash mismatch is an integrity error") {
    TempDir dir("ck");
    Trainer t(tiny_config());
    auto d = t.checkpoint();
    d.config_hash ^= 1;
    write_checkpoint(d, dir / "t.ckpt");
    CHECK_THROWS_AS(Trainer::from_checkpoint(dir / "t.ckpt"), IntegrityError);
  }
}

TEST_SUITE("training") {
  TEST_CASE("steps update parameters unless the rate is zero") {
    Trainer t(tiny_config());
    auto data = tiny_slices(1, 4);
    auto g = snapshot(*t.generator());
    auto d = snapshot(*t.discriminators());
    auto r = t.training_step(data.slices, AvailabilityCondition::parse("1011"), 0.0);
    CHECK(equals_snapshot(*t.generator(), g));
    CHECK(equals_snapshot(*t.discriminators(), d));
    CHECK(r.synthesis > 0.0);
    CHECK(r.discriminator > 0.0);
    CHECK(r.generator_total == doctest::Approx(100 * r.synthesis + 30 * r.reconstruction + r.adversarial));
    t.training_step(data.slices, AvailabilityCondition::parse("1011"), 2e-4);
    CHECK_FALSE(equals_snapshot(*t.generator(), g));
    CHECK_THROWS_AS(t.training_step(data.slices, AvailabilityCondition::parse("1111"), 1e-3),
                    InvalidConditionError);
  }

  TEST_CASE("identical seeds give identical loss sequences") {
    auto data = tiny_slices(1, 4);
    Trainer a(tiny_config()), b(tiny_config());
    for (int i = 0; i < 3; ++i) {
      auto ra = a.training_step(data.slices), rb = b.training_step(data.slices);
      CHECK(ra.generator_total == rb.generator_total);
      CHECK(ra.discriminator == rb.discriminator);
    }
    CHECK(same_parameters(*a.generator(), *b.generator()));
  }

  TEST_CASE("non-finite loss raises a divergence error") {
    Trainer t(tiny_config());
    auto data = tiny_slices(1, 4).slices.clone();
    data.select(1, 1).fill_(std::numeric_limits<float>::quiet_NaN());
    try {
      t.training_step(data, AvailabilityCondition::parse("1011"), 1e-3);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK_FALSE(e.term().empty());
    }
  }

  TEST_CASE("smoke run writes a checkpoint and one log row per iteration") {
    TempDir dir("run");
    auto c = tiny_config();
    c.epochs = 1;
    c.decay_start = 1;
    Trainer t(c);
    auto result = t.train(tiny_slices(2, 4), dir.path());
    CHECK(std::filesystem::exists(result.final_checkpoint));
    CHECK(std::filesystem::exists(dir / "effective_config.json"));
    auto log = read_log(result.log);
    REQUIRE(log.size() == 2);
    for (const auto& row : log) {
      CHECK(row.epoch == 0);
      CHECK(std::count(row.condition.begin(), row.condition.end(), '0') == 1);
    }
    CHECK(log[1].iteration == 1);
  }

  TEST_CASE("resume continues the uninterrupted run exactly") {
    TempDir dir("run");
    auto c = tiny_config();
    auto data = tiny_slices(2, 4);
    Trainer full(c);
    full.train(data, dir / "full");
    auto reference = read_log(dir / "full" / "train_log.jsonl");

    auto resumed = Trainer::from_checkpoint(dir / "full" / "checkpoints" / "epoch_0001.ckpt");
    CHECK(resumed.epoch() == 1);
    resumed.train(data, dir / "resumed");
    CHECK(resumed.epoch() == 2);
    auto tail = read_log(dir / "resumed" / "train_log.jsonl");
    REQUIRE(tail.size() == 2);
    for (std::size_t i = 0; i < tail.size(); ++i) {
      const auto& ref = reference[i + 2];
      CHECK(tail[i].epoch == ref.epoch);
      CHECK(tail[i].iteration == ref.iteration);
      CHECK(tail[i].condition == ref.condition);
      CHECK(tail[i].losses.generator_total == ref.losses.generator_total);
    }
    CHECK(same_parameters(*resumed.generator(), *full.generator()));
  }

  TEST_CASE("supervised regression overfits a small set") {
    auto c = tiny_config();
    c.loss.adversarial = 0.0;
    c.train_discriminator = false;
    Trainer t(c);
    auto data = tiny_slices(4, 4);
    const auto ac = AvailabilityCondition::parse("1011");
    const double first = t.training_step(data.slices, ac, 2e-3).generator_total;
    double last = first;
    for (int i = 0; i < 60; ++i) last = t.training_step(data.slices, ac, 2e-3).generator_total;
    CHECK(last < 0.5 * first);
  }
}

TEST_SUITE("config") {
  TEST_CASE("json round trip, overrides and validation") {
    auto c = tiny_config();
    c.model.fusion = FusionStrategy::kHemis;
    c.data.dir = "somewhere";
    auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));

    auto j = to_json(c);
    apply_override(j, "model.fusion=max");
    apply_override(j, "training.epochs=7");
    auto o = config_from_json(j);
    CHECK(o.model.fusion == FusionStrategy::kMax);
    CHECK(o.epochs == 7);
    CHECK(config_hash(o) != config_hash(c));

    nlohmann::json bad = {{"model", {{"widthz", 3}}}};
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "no-equals-sign"), ConfigError);

    ExperimentConfig v;
    v.decay_start = 300;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = ExperimentConfig{};
    v.learning_rate = 0.0;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = ExperimentConfig{};
    v.batch_size = 0;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = ExperimentConfig{};
    v.image_size = 40;
    CHECK_THROWS_AS(v.validate(), ConfigError);
  }
}
