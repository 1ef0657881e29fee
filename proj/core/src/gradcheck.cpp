#include "irp/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "irp/error.hpp"
#include "irp/rng.hpp"

namespace irp::nn {

GradCheckResult grad_check(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                           const GradCheckOptions& opts) {
  if (!(opts.eps >= 1e-7 && opts.eps <= 1e-3)) throw InvalidArgument("grad_check: eps must lie in [1e-7, 1e-3]");
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  backward(loss());

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].numel(); ++i) coords.emplace_back(t, i);
  if (coords.size() > opts.max_coords) {
    auto rng = make_rng(opts.seed, "grad_check");
    for (std::size_t i = 0; i < opts.max_coords; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(opts.max_coords);
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (const auto& [t, i] : coords) {
    auto d = params[t].data();
    const double saved = d[i];
    d[i] = saved + opts.eps;
    const double up = loss().item();
    d[i] = saved - opts.eps;
    const double down = loss().item();
    d[i] = saved;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const auto g = params[t].grad();
    const double analytic = g.empty() ? 0.0 : g[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    const double err = std::abs(analytic - numeric) / denom;
    if (err > result.max_rel_error || result.coords_checked == 0) {
      result.max_rel_error = err;
      result.worst_tensor = t;
      result.worst_index = i;
      result.analytic = analytic;
      result.numeric = numeric;
    }
    ++result.coords_checked;
  }
  return result;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  GradCheckOptions opts;
  opts.eps = eps;
  opts.max_coords = std::max<std::size_t>(x.numel(), 20);
  return grad_check([&] { return f(x); }, {x}, opts);
}

}  // namespace irp::nn
