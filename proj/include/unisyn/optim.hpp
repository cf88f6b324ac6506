#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace unisyn {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kSgd;
  double momentum = 0.0;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

/// SGD (optional momentum) or Adam over a fixed list of named parameters.
/// Parameters whose gradient is undefined at step time are left untouched,
/// state included.
class Optimizer {
 public:
  Optimizer(NamedTensors params, OptimizerOptions options);

  void zero_grad();
  void step(double learning_rate);

  const OptimizerOptions& options() const noexcept { return options_; }
  const NamedTensors& parameters() const noexcept { return params_; }

  /// State tensors keyed "<param>/<slot>".
  NamedTensors state() const;
  /// Restores state written by state(); unknown keys raise ConfigError.
  void load_state(const std::map<std::string, torch::Tensor>& state);

 private:
  struct Slot {
    torch::Tensor first;   // momentum buffer or Adam first moment
    torch::Tensor second;  // Adam second moment
    std::int64_t steps = 0;
  };

  NamedTensors params_;
  OptimizerOptions options_;
  std::vector<Slot> slots_;
};

NamedTensors named_parameters(torch::nn::Module& module);

}  // namespace unisyn
