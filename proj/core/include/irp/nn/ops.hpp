#pragma once

#include <vector>

#include "irp/nn/tensor.hpp"

namespace irp::nn {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_n(const std::vector<Tensor>& xs);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

// Same data, new shape of equal element count.
Tensor reshape(const Tensor& x, Shape shape);

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
};

// Cross-correlation. x: {C, H, W}; weight: {O, C/groups, kh, kw}; bias: {O} or undefined.
// Output size per axis: floor((in + 2 pad - dilation (k - 1) - 1) / stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& opts = {});

// x: {C, L}; weight: {O, C/groups, k}; bias: {O} or undefined.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int padding = 0,
              int dilation = 1, int stride = 1, int groups = 1);

// x: {in}; weight: {out, in}; bias: {out} or undefined.
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

// {C, H, W} -> {C}
Tensor global_avg_pool(const Tensor& x);

// Non-overlapping k x k mean pooling of {C, H, W}; trailing rows/columns are dropped.
Tensor avg_pool2d(const Tensor& x, int k);

// Non-overlapping mean pooling of {C, L}.
Tensor avg_pool1d(const Tensor& x, int k);

// {C} -> {C, H, W}
Tensor broadcast_spatial(const Tensor& v, std::size_t height, std::size_t width);

// F: {C, H, W}, w: {C}; out[c] = w[c] * F[c].
Tensor channel_scale(const Tensor& features, const Tensor& weights);

// Concatenate {C_i, H, W} along channels.
Tensor concat_channels(const std::vector<Tensor>& xs);

// Nearest-neighbour resize of {C, H, W}.
Tensor resize_nearest(const Tensor& x, std::size_t height, std::size_t width);

// B tensors of shape {C} -> {B, C}
Tensor stack(const std::vector<Tensor>& xs);

// Row `i` of a {B, C} tensor as {C}.
Tensor row(const Tensor& x, std::size_t i);

// Softmax over axis 0 of {B, C}, i.e. per column, with max subtraction.
Tensor softmax_rows(const Tensor& x);

// Per-channel softmax across branch logits, each {C}. Weights are non-negative and sum
// to 1 per channel.
std::vector<Tensor> softmax_over_branches(const std::vector<Tensor>& logits);

// mean |pred - target|. The subgradient at pred == target is 0.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

}  // namespace irp::nn
