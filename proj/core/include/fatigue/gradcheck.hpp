#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fatigue/tensor.hpp"

namespace fatigue {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // "component.tensor" whose analytic gradient is deliberately perturbed.
  std::optional<std::string> corrupt;
};

struct TensorCheck {
  std::string component;
  std::string tensor;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

double relative_error(double analytic, double numeric, double floor) noexcept;

// Compares analytic gradients against central differences of loss(),
// perturbing each parameter in place and restoring it afterwards.
std::vector<TensorCheck> check_gradients(std::span<ParamSet* const> params,
                                         std::span<const std::string> component_names,
                                         std::span<const ParamSet> analytic,
                                         const std::function<double()>& loss,
                                         const GradcheckOptions& options);

// Full detector (all four encoders, fusion, head) on a small random batch
// with random labels, plus the eye and GSR denoisers under an MSE loss.
std::vector<TensorCheck> gradcheck_model(std::uint64_t seed, const GradcheckOptions& options = {});

}  // namespace fatigue
