#include "irp/nn/params.hpp"

#include <cmath>

#include "irp/error.hpp"

namespace irp::nn {

Tensor Parameters::add(std::string name, Tensor t) {
  if (contains(name)) throw InvalidArgument("duplicate parameter name '" + name + "'");
  t.set_requires_grad(true);
  items_.push_back({std::move(name), t});
  return t;
}

const Tensor& Parameters::at(const std::string& name) const {
  for (const auto& it : items_)
    if (it.name == name) return it.tensor;
  throw InvalidArgument("unknown parameter '" + name + "'");
}

bool Parameters::contains(const std::string& name) const {
  for (const auto& it : items_)
    if (it.name == name) return true;
  return false;
}

std::size_t Parameters::total_elements() const {
  std::size_t n = 0;
  for (const auto& it : items_) n += it.tensor.numel();
  return n;
}

std::vector<Tensor> Parameters::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& it : items_) out.push_back(it.tensor);
  return out;
}

void Parameters::zero_grad() {
  for (auto& it : items_) it.tensor.zero_grad();
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = uniform(rng, -limit, limit);
  return Tensor(std::move(shape), std::move(data), true);
}

}  // namespace irp::nn
