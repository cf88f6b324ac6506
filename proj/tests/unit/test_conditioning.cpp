#include "unit.hpp"

#include <map>

#include "unisyn/conditioning.hpp"
#include "unisyn/errors.hpp"

using namespace unisyn;

TEST_CASE("parse and print availability conditions") {
  auto ac = AvailabilityCondition::parse("1011");
  CHECK(ac.size() == 4);
  CHECK(ac.available(0));
  CHECK(ac.missing(1));
  CHECK(ac.available_count() == 3);
  CHECK(ac.missing_indices() == std::vector<int>{1});
  CHECK(ac.to_string() == "1011");
  CHECK_THROWS_AS(AvailabilityCondition::parse("10a1"), InvalidConditionError);
  CHECK_THROWS_AS(AvailabilityCondition::parse("1"), InvalidConditionError);
  CHECK_THROWS_AS(AvailabilityCondition::parse("0000").require_input_valid(), InvalidConditionError);
  CHECK_THROWS_AS(AvailabilityCondition::parse("1111").require_training_valid(), InvalidConditionError);
  CHECK_NOTHROW(AvailabilityCondition::parse("1111").require_input_valid());
}

TEST_CASE("curriculum missing count follows the three phases") {
  CurriculumSchedule schedule;
  CHECK(curriculum_missing_count(5, schedule, 4) == MissingCountRule::fixed(1));
  CHECK(curriculum_missing_count(15, schedule, 4) == MissingCountRule::fixed(2));
  CHECK(curriculum_missing_count(25, schedule, 4) == MissingCountRule::fixed(3));
  CHECK(curriculum_missing_count(25, schedule, 3) == MissingCountRule::fixed(2));
  CHECK(curriculum_missing_count(30, schedule, 4) == MissingCountRule::uniform_count());
  schedule.after = PostCurriculumPolicy::kUniformSubset;
  CHECK(curriculum_missing_count(1000, schedule, 4) == MissingCountRule::uniform_subset());
  // Boundaries of each phase.
  CHECK(curriculum_missing_count(9, CurriculumSchedule{}, 4).k == 1);
  CHECK(curriculum_missing_count(10, CurriculumSchedule{}, 4).k == 2);
  CHECK(curriculum_missing_count(29, CurriculumSchedule{}, 4).k == 3);
}

TEST_CASE("sample_condition respects the requested count") {
  Rng rng(123);
  for (int i = 0; i < 50; ++i) {
    auto ac = sample_condition(rng, MissingCountRule::fixed(3), 4);
    CHECK(ac.available_count() == 1);
  }
  CHECK_THROWS_AS(sample_condition(rng, MissingCountRule::fixed(4), 4), InvalidConditionError);
  CHECK_THROWS_AS(sample_condition(rng, MissingCountRule::fixed(0), 4), InvalidConditionError);
  for (auto rule : {MissingCountRule::uniform_count(), MissingCountRule::uniform_subset()}) {
    for (int i = 0; i < 200; ++i) {
      auto ac = sample_condition(rng, rule, 4);
      CHECK(ac.missing_count() >= 1);
      CHECK(ac.missing_count() <= 3);
    }
  }
}

TEST_CASE("single-missing patterns are uniform (chi-square)") {
  Rng rng(2024);
  std::map<std::string, int> counts;
  for (int i = 0; i < 4000; ++i) counts[sample_condition(rng, MissingCountRule::fixed(1), 4).to_string()]++;
  REQUIRE(counts.size() == 4);
  double chi2 = 0.0;
  for (const auto& [ac, n] : counts) {
    CHECK(n >= 900);
    CHECK(n <= 1100);
    chi2 += (n - 1000.0) * (n - 1000.0) / 1000.0;
  }
  // 3 degrees of freedom: the 0.99 quantile is 11.345.
  CHECK(chi2 < 11.345);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_condition(a, MissingCountRule::uniform_count(), 4) ==
          sample_condition(b, MissingCountRule::uniform_count(), 4));
  }
}

TEST_CASE("zero_impute masks exactly the missing channels") {
  auto batch = torch::rand({3, 4, 5, 5}) + 0.1;
  auto full = zero_impute(batch, AvailabilityCondition::all_available(4));
  CHECK(torch::equal(full.pixels, batch));

  auto ac = AvailabilityCondition::parse("1010");
  auto masked = zero_impute(batch, ac);
  CHECK(torch::equal(masked.pixels.select(1, 0), batch.select(1, 0)));
  CHECK(torch::equal(masked.pixels.select(1, 2), batch.select(1, 2)));
  CHECK(masked.pixels.select(1, 1).abs().max().item<float>() == 0.0f);
  CHECK(masked.pixels.select(1, 3).abs().max().item<float>() == 0.0f);
  CHECK(torch::equal(masked.targets, batch));
  // The input batch is left alone.
  CHECK(batch.min().item<float>() > 0.0f);

  auto twice = zero_impute(masked.pixels, ac);
  CHECK(torch::equal(twice.pixels, masked.pixels));

  CHECK_THROWS_AS(zero_impute(batch, AvailabilityCondition::parse("0000")), InvalidConditionError);
  CHECK_THROWS_AS(zero_impute(batch, AvailabilityCondition::parse("101")), DimensionError);
}

TEST_CASE("valid conditions are enumerated in result-table order") {
  auto four = all_valid_conditions(4);
  REQUIRE(four.size() == 14);
  CHECK(four.front().to_string() == "0001");
  CHECK(four[4].to_string() == "0011");
  CHECK(four.back().to_string() == "1110");
  CHECK(all_valid_conditions(3).size() == 6);
  CHECK(all_valid_conditions(2).size() == 2);
}
