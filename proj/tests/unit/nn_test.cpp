#include <gtest/gtest.h>

#include <cmath>

#include "irp/error.hpp"
#include "irp/nn/checkpoint.hpp"
#include "irp/nn/gradcheck.hpp"
#include "irp/nn/ops.hpp"
#include "irp/nn/optim.hpp"
#include "irp/nn/params.hpp"
#include "irp/rng.hpp"
#include "temp_dir.hpp"

namespace irp::nn {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = false, double lo = -1.0, double hi = 1.0) {
  auto rng = make_rng(seed, "test.tensor");
  Tensor t(std::move(shape), 0.0, grad);
  for (auto& v : t.data()) v = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Weighted sum so that every output coordinate gets a distinct upstream gradient.
Tensor project(const Tensor& out, std::uint64_t seed) { return sum(mul(out, random_tensor(out.shape(), seed))); }

TEST(Conv2d, OneByOneIdentity) {
  const auto x = random_tensor({3, 5, 6}, 1);
  Tensor w({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) w.data()[c * 3 + c] = 1.0;
  const auto y = conv2d(x, w, Tensor());
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, OnesKernelOnConstantInput) {
  const Tensor x({2, 6, 6}, 0.5);
  const Tensor w({1, 2, 3, 3}, 1.0);
  const auto y = conv2d(x, w, Tensor(), {.stride = 1, .padding = 1});
  ASSERT_EQ(y.shape(), (Shape{1, 6, 6}));
  EXPECT_DOUBLE_EQ(y.data()[2 * 6 + 3], 9.0);  // interior: 9 taps x 2 channels x 0.5
  EXPECT_DOUBLE_EQ(y.data()[0], 4.0);          // corner sees 4 taps
}

TEST(Conv2d, DilatedTapsMatchManualDot) {
  Tensor x({1, 7, 7});
  for (std::size_t i = 0; i < 49; ++i) x.data()[i] = static_cast<double>(i);
  const auto w = random_tensor({1, 1, 3, 3}, 2);
  const auto y = conv2d(x, w, Tensor(), {.dilation = 2});
  ASSERT_EQ(y.shape(), (Shape{1, 3, 3}));
  for (int oy = 0; oy < 3; ++oy)
    for (int ox = 0; ox < 3; ++ox) {
      double expect = 0.0;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) expect += w.data()[ky * 3 + kx] * x.data()[(oy + 2 * ky) * 7 + ox + 2 * kx];
      EXPECT_NEAR(y.data()[oy * 3 + ox], expect, 1e-9);
    }
}

TEST(Conv2d, GroupedEqualsPerGroupConvolution) {
  const auto x = random_tensor({4, 8, 8}, 3);
  const auto w = random_tensor({6, 2, 3, 3}, 4);
  const auto b = random_tensor({6}, 5);
  const auto y = conv2d(x, w, b, {.stride = 1, .padding = 1, .dilation = 1, .groups = 2});
  for (std::size_t g = 0; g < 2; ++g) {
    Tensor xg({2, 8, 8}), wg({3, 2, 3, 3}), bg({3});
    std::copy_n(x.data().begin() + g * 128, 128, xg.data().begin());
    std::copy_n(w.data().begin() + g * 54, 54, wg.data().begin());
    std::copy_n(b.data().begin() + g * 3, 3, bg.data().begin());
    const auto yg = conv2d(xg, wg, bg, {.padding = 1});
    for (std::size_t i = 0; i < yg.numel(); ++i) EXPECT_NEAR(y.data()[g * 192 + i], yg.data()[i], 1e-12);
  }
}

TEST(Conv2d, StrideOutputSizeAndErrors) {
  const auto x = random_tensor({3, 9, 7}, 6);
  EXPECT_EQ(conv2d(x, random_tensor({5, 3, 3, 3}, 7), Tensor(), {.stride = 2, .padding = 1}).shape(),
            (Shape{5, 5, 4}));
  EXPECT_THROW(conv2d(x, random_tensor({5, 2, 3, 3}, 7), Tensor()), DimensionError);
  EXPECT_THROW(conv2d(x, random_tensor({4, 1, 1, 1}, 7), Tensor(), {.groups = 2}), DimensionError);
}

TEST(Conv1d, DeltaAverageAndDerivative) {
  Tensor x({1, 16});
  for (std::size_t i = 0; i < 16; ++i) x.data()[i] = 2.0 * i + 1.0;
  const auto delta = conv1d(x, Tensor({1, 1, 3}, std::vector<double>{0, 1, 0}), Tensor(), 1);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(delta.data()[i], x.data()[i]);
  const auto avg = conv1d(x, Tensor({1, 1, 3}, std::vector<double>{1. / 3, 1. / 3, 1. / 3}), Tensor());
  ASSERT_EQ(avg.shape(), (Shape{1, 14}));
  for (std::size_t i = 0; i < 14; ++i) EXPECT_NEAR(avg.data()[i], x.data()[i + 1], 1e-12);
  const auto deriv = conv1d(x, Tensor({1, 1, 3}, std::vector<double>{-0.5, 0, 0.5}), Tensor());
  for (std::size_t i = 0; i < 14; ++i) EXPECT_NEAR(deriv.data()[i], 2.0, 1e-12);
}

TEST(Softmax, ClosedForms) {
  const auto equal = softmax_over_branches({Tensor({2}, 0.3), Tensor({2}, 0.3), Tensor({2}, 0.3)});
  for (const auto& v : equal) EXPECT_NEAR(v.data()[0], 1.0 / 3.0, 1e-15);
  const auto peaked = softmax_over_branches({Tensor({1}, 1000.0), Tensor({1}, 0.0), Tensor({1}, 0.0)});
  EXPECT_NEAR(peaked[0].data()[0], 1.0, 1e-15);
  EXPECT_GE(peaked[1].data()[0], 0.0);
  EXPECT_LT(peaked[1].data()[0], 1e-300);
  const auto logits = random_tensor({4, 7}, 8, false, -30, 30);
  const auto s = softmax_rows(logits);
  for (std::size_t c = 0; c < 7; ++c) {
    double total = 0.0;
    for (std::size_t b = 0; b < 4; ++b) total += s.data()[b * 7 + c];
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Autograd, SumAndL1Gradients) {
  const auto x = random_tensor({3, 4}, 9, true);
  backward(sum(x));
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 1.0);

  Tensor pred({4}, std::vector<double>{1, 2, 3, 4}, true);
  const Tensor target({4}, std::vector<double>{1, 3, 2, 4});
  const auto loss = l1_loss(pred, target);
  EXPECT_DOUBLE_EQ(loss.item(), 0.5);
  backward(loss);
  EXPECT_EQ(std::vector<double>(pred.grad().begin(), pred.grad().end()), (std::vector<double>{0, -0.25, 0.25, 0}));

  Tensor same({2}, std::vector<double>{5, 6}, true);
  EXPECT_DOUBLE_EQ(l1_loss(same, same.clone()).item(), 0.0);
}

TEST(Autograd, NonScalarBackwardThrows) {
  const auto x = random_tensor({3}, 10, true);
  EXPECT_THROW(backward(relu(x)), DimensionError);
}

TEST(Autograd, NoGradSkipsHistory) {
  const auto x = random_tensor({3}, 11, true);
  NoGradGuard guard;
  EXPECT_FALSE(relu(x).requires_grad());
}

TEST(GradCheck, EveryLayer) {
  const auto x = random_tensor({4, 9, 9}, 12, true);
  const auto w = random_tensor({4, 2, 3, 3}, 13, true);
  const auto b = random_tensor({4}, 14, true);
  const auto x1 = random_tensor({2, 24}, 15, true);
  const auto w1 = random_tensor({3, 2, 5}, 16, true);
  const auto v = random_tensor({12}, 17, true);
  const auto wd = random_tensor({5, 12}, 18, true);
  const auto bd = random_tensor({5}, 19, true);
  const auto s = random_tensor({4}, 20, true);
  const auto l0 = random_tensor({4}, 21, true, -2, 2);
  const auto l1 = random_tensor({4}, 22, true, -2, 2);
  const auto l2 = random_tensor({4}, 23, true, -2, 2);

  struct Case {
    const char* name;
    std::function<Tensor()> loss;
    std::vector<Tensor> params;
  };
  const std::vector<Case> cases{
      {"conv2d", [&] { return project(conv2d(x, w, b, {.stride = 2, .padding = 1, .dilation = 1, .groups = 2}), 1); },
       {x, w, b}},
      {"conv2d_dilated", [&] { return project(conv2d(x, w, b, {.padding = 2, .dilation = 2, .groups = 2}), 2); },
       {x, w, b}},
      {"conv1d", [&] { return project(conv1d(x1, w1, Tensor(), 2), 3); }, {x1, w1}},
      {"dense", [&] { return project(dense(v, wd, bd), 4); }, {v, wd, bd}},
      {"leaky_relu", [&] { return project(leaky_relu(x, 0.2), 5); }, {x}},
      {"avg_pool2d", [&] { return project(avg_pool2d(x, 2), 6); }, {x}},
      {"avg_pool1d", [&] { return project(avg_pool1d(x1, 4), 7); }, {x1}},
      {"global_avg_pool", [&] { return project(global_avg_pool(x), 8); }, {x}},
      {"broadcast", [&] { return project(broadcast_spatial(s, 3, 2), 9); }, {s}},
      {"channel_scale", [&] { return project(channel_scale(x, s), 10); }, {x, s}},
      {"concat", [&] { return project(concat_channels({x, scale(x, 2.0)}), 11); }, {x}},
      {"resize", [&] { return project(resize_nearest(x, 4, 13), 12); }, {x}},
      {"softmax", [&] {
         const auto sm = softmax_over_branches({l0, l1, l2});
         return add(project(sm[0], 13), add(project(sm[1], 14), project(sm[2], 15)));
       },
       {l0, l1, l2}},
      {"stack_row", [&] { return project(row(stack({s, l0}), 1), 16); }, {s, l0}},
      {"mean_add_n", [&] { return mean(mul(add_n({s, l0, l1}), l2)); }, {s, l0, l1, l2}},
  };
  for (const auto& c : cases) {
    const auto r = grad_check(c.loss, c.params, {.max_coords = 128});
    EXPECT_LT(r.max_rel_error, 1e-3) << c.name << " worst tensor " << r.worst_tensor << " index " << r.worst_index;
    EXPECT_GT(r.coords_checked, 0u) << c.name;
  }
}

TEST(GradCheck, LinearFunctionIsExact) {
  const auto x = random_tensor({20}, 24, true);
  const auto c = random_tensor({20}, 25);
  const auto r = grad_check([&](const Tensor& t) { return sum(mul(t, c)); }, x, 1e-3);
  EXPECT_LT(r.max_rel_error, 1e-10);
}

TEST(GradCheck, ReluAwayFromKink) {
  auto x = random_tensor({30}, 26, true, 0.1, 1.0);
  for (std::size_t i = 0; i < 30; i += 2) x.data()[i] = -x.data()[i];
  const auto r = grad_check([&](const Tensor& t) { return project(relu(t), 27); }, x);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, ReportsWorstCoordinate) {
  // A deliberately wrong backward on coordinate 3.
  auto x = random_tensor({6}, 28, true);
  auto broken = [&]() {
    std::vector<double> d(x.data().begin(), x.data().end());
    double total = 0.0;
    for (double v : d) total += v * v;
    return Tensor::make_result({1}, {total}, {x}, [](detail::Node& self) {
      auto& p = *self.parents[0];
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * (i == 3 ? 5.0 : 2.0 * p.data[i]);
    });
  };
  const auto r = grad_check(broken, {x});
  EXPECT_EQ(r.worst_tensor, 0u);
  EXPECT_EQ(r.worst_index, 3u);
  EXPECT_GT(r.max_rel_error, 1e-2);
  EXPECT_THROW(grad_check(broken, {x}, {.eps = 1e-2}), InvalidArgument);
}

TEST(Adam, ZeroGradientLeavesParameter) {
  double p = 0.7, m = 0.0, v = 0.0;
  adam_update(p, 0.0, m, v, 1, {});
  EXPECT_EQ(p, 0.7);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first step is lr * g / (|g| + eps') ~= lr * sign(g).
  for (double g : {1e-3, 0.5, -7.0}) {
    double p = 1.0, m = 0.0, v = 0.0;
    AdamOptions opts;
    adam_update(p, g, m, v, 1, opts);
    const double mhat = (1 - opts.beta1) * g / (1 - opts.beta1);
    const double vhat = (1 - opts.beta2) * g * g / (1 - opts.beta2);
    EXPECT_NEAR(p, 1.0 - opts.lr * mhat / (std::sqrt(vhat) + opts.eps), 1e-15);
    EXPECT_NEAR(std::abs(1.0 - p), opts.lr, 1e-5 * opts.lr + 1e-8);
  }
}

TEST(Adam, HandComputedSecondStep) {
  AdamOptions opts{.lr = 0.1, .beta1 = 0.5, .beta2 = 0.75, .eps = 0.0};
  double p = 0.0, m = 0.0, v = 0.0;
  adam_update(p, 2.0, m, v, 1, opts);
  adam_update(p, -1.0, m, v, 2, opts);
  // m = 0.5 * 1 + 0.5 * -1 = 0; p unchanged by step 2.
  EXPECT_NEAR(p, -0.1, 1e-15);
  EXPECT_NEAR(m, 0.0, 1e-15);
  EXPECT_NEAR(v, 0.75 * 1.0 + 0.25 * 1.0, 1e-15);
}

TEST(Params, RegistryAndInit) {
  Parameters ps;
  auto rng = make_rng(1, "test.init");
  ps.add("a.w", glorot_uniform({4, 3}, 3, 4, rng));
  ps.add("a.b", Tensor({4}));
  EXPECT_THROW(ps.add("a.b", Tensor({4})), InvalidArgument);
  EXPECT_TRUE(ps.at("a.w").requires_grad());
  EXPECT_EQ(ps.total_elements(), 16u);
  const double limit = std::sqrt(6.0 / 7.0);
  for (double v : ps.at("a.w").data()) EXPECT_LE(std::abs(v), limit);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::vector<NamedTensor> ts{{"x", random_tensor({2, 3}, 30)}, {"empty.dims", Tensor({1}, 1.0 / 3.0)}};
  ts[0].tensor.data()[0] = std::nextafter(1.0, 2.0);
  const auto bytes = encode_checkpoint(ts);
  const auto back = decode_checkpoint(bytes);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].name, ts[i].name);
    EXPECT_EQ(back[i].tensor.shape(), ts[i].tensor.shape());
    for (std::size_t j = 0; j < ts[i].tensor.numel(); ++j) EXPECT_EQ(back[i].tensor.data()[j], ts[i].tensor.data()[j]);
  }
  EXPECT_EQ(encode_checkpoint(back), bytes);

  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_checkpoint(bad), FormatError);

  test::TempDir dir;
  save_checkpoint(dir / "c.irpw", ts);
  EXPECT_EQ(load_checkpoint(dir / "c.irpw").size(), 2u);
  EXPECT_THROW(load_checkpoint(dir / "missing.irpw"), IoError);
}

}  // namespace
}  // namespace irp::nn
