#pragma once

// Central finite-difference gradient checking for float64 tensors.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace unisyn::testing {

using ScalarFn = std::function<torch::Tensor(const std::vector<torch::Tensor>&)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "<target index>[<flat element>]"
};

namespace detail {

// `targets` are leaves with requires_grad; `evaluate` reads them implicitly.
inline GradcheckResult compare(const std::function<torch::Tensor()>& evaluate,
                               const std::vector<torch::Tensor>& targets, double eps, double floor) {
  auto out = evaluate();
  auto analytic = torch::autograd::grad({out}, targets, {}, false, false, true);
  GradcheckResult result;
  torch::NoGradGuard no_grad;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto flat = targets[k].view({-1});
    auto grad = analytic[k].defined() ? analytic[k].contiguous().view({-1}) : torch::zeros_like(flat);
    for (std::int64_t e = 0; e < flat.numel(); ++e) {
      const double saved = flat[e].item<double>();
      flat[e] = saved + eps;
      const double plus = evaluate().item<double>();
      flat[e] = saved - eps;
      const double minus = evaluate().item<double>();
      flat[e] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      const double a = grad[e].item<double>();
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = std::to_string(k) + "[" + std::to_string(e) + "]";
      }
    }
  }
  return result;
}

}  // namespace detail

/// Checks autograd gradients of the scalar f(inputs) against central
/// differences for every input element. Inputs must be float64. The relative
/// error of an element is |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradcheckResult gradcheck(const ScalarFn& f, std::vector<torch::Tensor> inputs, double eps = 1e-6,
                                 double floor = 1e-3) {
  for (auto& x : inputs) x = x.detach().clone().set_requires_grad(true);
  return detail::compare([&] { return f(inputs); }, inputs, eps, floor);
}

/// Same check, also covering every parameter of `module` (already float64).
inline GradcheckResult gradcheck_module(torch::nn::Module& module, const ScalarFn& f,
                                        std::vector<torch::Tensor> inputs, double eps = 1e-6,
                                        double floor = 1e-3) {
  for (auto& x : inputs) x = x.detach().clone().set_requires_grad(true);
  std::vector<torch::Tensor> targets = inputs;
  for (auto& p : module.parameters()) targets.push_back(p);
  return detail::compare([&] { return f(inputs); }, targets, eps, floor);
}

}  // namespace unisyn::testing
