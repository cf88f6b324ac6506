#include "unisyn/optim.hpp"

#include <cmath>

#include "unisyn/errors.hpp"

namespace unisyn {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (sgd|adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

NamedTensors named_parameters(torch::nn::Module& module) {
  NamedTensors out;
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    out.emplace_back(item.key(), item.value());
  }
  return out;
}

Optimizer::Optimizer(NamedTensors params, OptimizerOptions options)
    : params_(std::move(params)), options_(options), slots_(params_.size()) {}

void Optimizer::zero_grad() {
  for (auto& [name, p] : params_) p.mutable_grad().reset();
}

void Optimizer::step(double learning_rate) {
  torch::NoGradGuard no_grad;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].second;
    const auto& grad = p.grad();
    if (!grad.defined()) continue;
    auto& slot = slots_[k];
    ++slot.steps;
    if (options_.kind == OptimizerKind::kSgd) {
      if (options_.momentum != 0.0) {
        if (!slot.first.defined()) {
          slot.first = grad.clone();
        } else {
          slot.first.mul_(options_.momentum).add_(grad);
        }
        p.sub_(learning_rate * slot.first);
      } else {
        p.sub_(learning_rate * grad);
      }
      continue;
    }
    if (!slot.first.defined()) {
      slot.first = torch::zeros_like(p);
      slot.second = torch::zeros_like(p);
    }
    slot.first.mul_(options_.beta1).add_((1.0 - options_.beta1) * grad);
    slot.second.mul_(options_.beta2).add_((1.0 - options_.beta2) * grad * grad);
    const double t = static_cast<double>(slot.steps);
    const double c1 = 1.0 - std::pow(options_.beta1, t);
    const double c2 = 1.0 - std::pow(options_.beta2, t);
    auto denom = (slot.second / c2).sqrt() + options_.eps;
    p.sub_(learning_rate * (slot.first / c1) / denom);
  }
}

NamedTensors Optimizer::state() const {
  NamedTensors out;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& name = params_[k].first;
    const auto& slot = slots_[k];
    if (slot.steps == 0) continue;
    out.emplace_back(name + "/steps", torch::tensor({slot.steps}, torch::kInt64));
    if (slot.first.defined()) out.emplace_back(name + "/first", slot.first);
    if (slot.second.defined()) out.emplace_back(name + "/second", slot.second);
  }
  return out;
}

void Optimizer::load_state(const std::map<std::string, torch::Tensor>& state) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < params_.size(); ++k) index[params_[k].first] = k;
  slots_.assign(params_.size(), Slot{});
  for (const auto& [key, value] : state) {
    const auto slash = key.rfind('/');
    const auto it = slash == std::string::npos ? index.end() : index.find(key.substr(0, slash));
    if (it == index.end()) throw ConfigError("optimizer state for unknown parameter '" + key + "'");
    auto& slot = slots_[it->second];
    const auto field = key.substr(slash + 1);
    if (field == "steps") {
      slot.steps = value.item<std::int64_t>();
    } else if (field == "first") {
      slot.first = value.clone();
    } else if (field == "second") {
      slot.second = value.clone();
    } else {
      throw ConfigError("unknown optimizer state slot '" + key + "'");
    }
  }
}

}  // namespace unisyn
