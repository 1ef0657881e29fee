#include "irp/nn/optim.hpp"

#include <cmath>

#include "irp/error.hpp"

namespace irp::nn {

void adam_update(double& param, double grad, double& m, double& v, long step, const AdamOptions& opts) {
  m = opts.beta1 * m + (1.0 - opts.beta1) * grad;
  v = opts.beta2 * v + (1.0 - opts.beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(opts.beta1, static_cast<double>(step)));
  const double vhat = v / (1.0 - std::pow(opts.beta2, static_cast<double>(step)));
  param -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
}

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& opts) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: parameter list changed between steps");
  ++state.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto d = params[k].data();
    const auto g = params[k].grad();
    if (state.m[k].size() != d.size()) throw DimensionError("adam_step: parameter shape changed between steps");
    for (std::size_t i = 0; i < d.size(); ++i) {
      adam_update(d[i], g.empty() ? 0.0 : g[i], state.m[k][i], state.v[k][i], state.step, opts);
    }
  }
}

}  // namespace irp::nn
