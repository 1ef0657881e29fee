#pragma once

#include <vector>

#include "irp/nn/tensor.hpp"

namespace irp::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

// One bias-corrected Adam update of a single scalar. `step` is the 1-based step count.
void adam_update(double& param, double grad, double& m, double& v, long step, const AdamOptions& opts);

// Updates every tensor in place from its accumulated gradient (absent gradient counts as
// zero). State buffers are created on first use; the parameter list must not change
// shape between calls.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& opts);

}  // namespace irp::nn
