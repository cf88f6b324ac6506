#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "unisyn/rng.hpp"

namespace unisyn {

/// Binary availability vector: flag i is 1 when modality i is present.
/// Serializes as a string of binary digits in modality order, e.g. "1011".
class AvailabilityCondition {
 public:
  AvailabilityCondition() = default;
  explicit AvailabilityCondition(std::vector<std::uint8_t> flags);

  static AvailabilityCondition parse(std::string_view digits);
  static AvailabilityCondition all_available(int modalities);

  int size() const noexcept { return static_cast<int>(flags_.size()); }
  bool available(int i) const { return flags_.at(static_cast<std::size_t>(i)) != 0; }
  bool missing(int i) const { return !available(i); }
  int available_count() const noexcept;
  int missing_count() const noexcept { return size() - available_count(); }
  std::vector<int> available_indices() const;
  std::vector<int> missing_indices() const;
  const std::vector<std::uint8_t>& flags() const noexcept { return flags_; }

  std::string to_string() const;

  /// Throws InvalidConditionError unless at least one modality is available.
  void require_input_valid() const;
  /// Throws InvalidConditionError unless at least one modality is available
  /// and at least one is missing.
  void require_training_valid() const;

  friend bool operator==(const AvailabilityCondition&, const AvailabilityCondition&) = default;

 private:
  std::vector<std::uint8_t> flags_;
};

/// How conditions are drawn once the curriculum phases are over.
enum class PostCurriculumPolicy {
  kUniformCount,   // draw missing count k uniformly, then a k-subset
  kUniformSubset,  // draw uniformly among all 2^M - 2 valid subsets
};

struct CurriculumSchedule {
  int easy_epochs = 10;
  int moderate_epochs = 10;
  int hard_epochs = 10;
  PostCurriculumPolicy after = PostCurriculumPolicy::kUniformCount;

  void validate() const;
};

/// Rule for the number of missing modalities in a sampled condition.
struct MissingCountRule {
  enum class Kind { kFixed, kUniformCount, kUniformSubset };
  Kind kind = Kind::kUniformCount;
  int k = 0;  // only meaningful for kFixed

  static MissingCountRule fixed(int k) { return {Kind::kFixed, k}; }
  static MissingCountRule uniform_count() { return {Kind::kUniformCount, 0}; }
  static MissingCountRule uniform_subset() { return {Kind::kUniformSubset, 0}; }

  friend bool operator==(const MissingCountRule&, const MissingCountRule&) = default;
};

/// Phase 1 -> 1 missing, phase 2 -> 2, phase 3 -> 3 (clamped to M-1),
/// afterwards the schedule's post-curriculum policy.
MissingCountRule curriculum_missing_count(int epoch, const CurriculumSchedule& schedule,
                                          int modalities);

AvailabilityCondition sample_condition(Rng& rng, const MissingCountRule& rule, int modalities);

/// Input to the generator: zero-imputed pixels, the condition that produced
/// them and the complete ground truth.
struct MultiModalBatch {
  torch::Tensor pixels;   // B x M x H x W, masked channels all-zero
  AvailabilityCondition condition;
  torch::Tensor targets;  // B x M x H x W
};

/// Zero the channels of missing modalities. Available channels are copied
/// bit-exactly. `batch` is B x M x H x W.
MultiModalBatch zero_impute(const torch::Tensor& batch, const AvailabilityCondition& ac);

/// Every condition with at least one available and one missing modality,
/// ordered by available count, then by ascending binary value
/// ("0001", "0010", ..., "0011", ..., "1110"), the result-table row order.
std::vector<AvailabilityCondition> all_valid_conditions(int modalities);

}  // namespace unisyn
