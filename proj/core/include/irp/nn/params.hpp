#pragma once

#include <string>
#include <vector>

#include "irp/nn/tensor.hpp"
#include "irp/rng.hpp"

namespace irp::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered, uniquely named parameter set. Order is insertion order and is what
// checkpoints and the optimizer iterate over.
class Parameters {
 public:
  // Registers a trainable tensor. Throws InvalidArgument on a duplicate name.
  Tensor add(std::string name, Tensor t);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return items_.size(); }
  std::size_t total_elements() const;
  const std::vector<NamedTensor>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> items_;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace irp::nn
