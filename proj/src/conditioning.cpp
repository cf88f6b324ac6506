#include "unisyn/conditioning.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "unisyn/errors.hpp"

namespace unisyn {

AvailabilityCondition::AvailabilityCondition(std::vector<std::uint8_t> flags)
    : flags_(std::move(flags)) {
  if (flags_.size() < 2) {
    throw InvalidConditionError("availability condition needs at least 2 modalities");
  }
  for (auto f : flags_) {
    if (f > 1) throw InvalidConditionError("availability flag must be 0 or 1");
  }
}

AvailabilityCondition AvailabilityCondition::parse(std::string_view digits) {
  std::vector<std::uint8_t> flags;
  flags.reserve(digits.size());
  for (char c : digits) {
    if (c != '0' && c != '1') {
      throw InvalidConditionError("availability string must contain only 0/1: '" +
                                  std::string(digits) + "'");
    }
    flags.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return AvailabilityCondition(std::move(flags));
}

AvailabilityCondition AvailabilityCondition::all_available(int modalities) {
  return AvailabilityCondition(std::vector<std::uint8_t>(static_cast<std::size_t>(modalities), 1));
}

int AvailabilityCondition::available_count() const noexcept {
  return std::accumulate(flags_.begin(), flags_.end(), 0);
}

std::vector<int> AvailabilityCondition::available_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (flags_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::vector<int> AvailabilityCondition::missing_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (!flags_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::string AvailabilityCondition::to_string() const {
  std::string s;
  s.reserve(flags_.size());
  for (auto f : flags_) s.push_back(static_cast<char>('0' + f));
  return s;
}

void AvailabilityCondition::require_input_valid() const {
  if (flags_.empty() || available_count() == 0) {
    throw InvalidConditionError("condition '" + to_string() + "' has no available modality");
  }
}

void AvailabilityCondition::require_training_valid() const {
  require_input_valid();
  if (missing_count() == 0) {
    throw InvalidConditionError("condition '" + to_string() + "' has no missing modality");
  }
}

void CurriculumSchedule::validate() const {
  if (easy_epochs < 0 || moderate_epochs < 0 || hard_epochs < 0) {
    throw ConfigError("curriculum phase lengths must be >= 0");
  }
}

MissingCountRule curriculum_missing_count(int epoch, const CurriculumSchedule& schedule,
                                          int modalities) {
  const int max_missing = modalities - 1;
  const int phase_ends[3] = {schedule.easy_epochs, schedule.easy_epochs + schedule.moderate_epochs,
                             schedule.easy_epochs + schedule.moderate_epochs +
                                 schedule.hard_epochs};
  for (int phase = 0; phase < 3; ++phase) {
    if (epoch < phase_ends[phase]) return MissingCountRule::fixed(std::min(phase + 1, max_missing));
  }
  return schedule.after == PostCurriculumPolicy::kUniformSubset ? MissingCountRule::uniform_subset()
                                                                : MissingCountRule::uniform_count();
}

namespace {

AvailabilityCondition random_subset_missing(Rng& rng, int k, int modalities) {
  std::vector<int> order(static_cast<std::size_t>(modalities));
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first k entries form a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, modalities - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(modalities), 1);
  for (int i = 0; i < k; ++i) flags[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
  return AvailabilityCondition(std::move(flags));
}

}  // namespace

AvailabilityCondition sample_condition(Rng& rng, const MissingCountRule& rule, int modalities) {
  if (modalities < 2) throw InvalidConditionError("need at least 2 modalities");
  switch (rule.kind) {
    case MissingCountRule::Kind::kFixed:
      if (rule.k < 1 || rule.k > modalities - 1) {
        throw InvalidConditionError("missing count " + std::to_string(rule.k) +
                                    " outside [1, " + std::to_string(modalities - 1) + "]");
      }
      return random_subset_missing(rng, rule.k, modalities);
    case MissingCountRule::Kind::kUniformCount: {
      std::uniform_int_distribution<int> count(1, modalities - 1);
      return random_subset_missing(rng, count(rng), modalities);
    }
    case MissingCountRule::Kind::kUniformSubset: {
      // Codes 1 .. 2^M - 2 are exactly the valid subsets.
      std::uniform_int_distribution<std::uint64_t> code(1, (std::uint64_t{1} << modalities) - 2);
      const auto c = code(rng);
      std::vector<std::uint8_t> flags(static_cast<std::size_t>(modalities));
      for (int i = 0; i < modalities; ++i)
        flags[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((c >> (modalities - 1 - i)) & 1U);
      return AvailabilityCondition(std::move(flags));
    }
  }
  throw InvalidConditionError("unknown missing-count rule");
}

MultiModalBatch zero_impute(const torch::Tensor& batch, const AvailabilityCondition& ac) {
  ac.require_input_valid();
  if (batch.dim() != 4 || batch.size(1) != ac.size()) {
    throw DimensionError("zero_impute expects B x " + std::to_string(ac.size()) +
                         " x H x W input");
  }
  auto pixels = batch.clone();
  {
    torch::NoGradGuard no_grad;
    for (int i : ac.missing_indices()) pixels.select(1, i).zero_();
  }
  return MultiModalBatch{pixels, ac, batch};
}

std::vector<AvailabilityCondition> all_valid_conditions(int modalities) {
  std::vector<AvailabilityCondition> out;
  const std::uint64_t full = (std::uint64_t{1} << modalities) - 1;
  for (int available = 1; available < modalities; ++available) {
    for (std::uint64_t code = 1; code < full; ++code) {
      if (std::popcount(code) != available) continue;
      std::vector<std::uint8_t> flags(static_cast<std::size_t>(modalities));
      for (int i = 0; i < modalities; ++i)
        flags[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>((code >> (modalities - 1 - i)) & 1U);
      out.emplace_back(std::move(flags));
    }
  }
  return out;
}

}  // namespace unisyn
