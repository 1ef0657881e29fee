#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "irp/nn/tensor.hpp"

namespace irp::nn {

struct GradCheckOptions {
  double eps = 1e-6;  // must lie in [1e-7, 1e-3]
  // Coordinates compared per call; all of them when the parameters are smaller.
  std::size_t max_coords = 64;
  std::uint64_t seed = 0;
  // Denominator floor so that near-zero gradients compare absolutely.
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  // Worst coordinate: which tensor and which flat index inside it.
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of the scalar `loss()` with central differences over
// the given parameters. Parameters are perturbed in place and restored.
GradCheckResult grad_check(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                           const GradCheckOptions& opts = {});

// Single-input form: f maps x to a scalar.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-6);

}  // namespace irp::nn
