#include <benchmark/benchmark.h>

#include "irp/imaging.hpp"
#include "irp/metrics.hpp"
#include "irp/nn/ops.hpp"
#include "irp/predictor.hpp"
#include "irp/restoration.hpp"
#include "irp/rng.hpp"
#include "irp/scene.hpp"

namespace {

irp::nn::Tensor random_tensor(irp::nn::Shape shape, std::uint64_t seed) {
  auto rng = irp::make_rng(seed, "bench");
  irp::nn::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = irp::uniform01(rng) - 0.5;
  return t;
}

void BM_Conv2d3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({c, 32, 32}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  irp::nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(irp::nn::conv2d(x, w, b, {.padding = 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c * c * 9 * 32 * 32));
}
BENCHMARK(BM_Conv2d3x3)->Arg(16)->Arg(32)->Arg(64);

void BM_SimulateCapture(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto scene = irp::generate_procedural_scene(1, size, size);
  const auto ladder = irp::make_exposure_ladder(irp::ExposureConfig{});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(irp::simulate_capture(scene.frame, scene.flow, ladder[8], ++seed));
}
BENCHMARK(BM_SimulateCapture)->Arg(64)->Arg(128);

void BM_Ssim(benchmark::State& state) {
  const auto scene = irp::generate_procedural_scene(2, 64, 64);
  const irp::FlowField still(64, 64);
  const auto a = irp::simulate_capture(scene.frame, still, irp::ExposureConfig{}, 1);
  const auto b = irp::simulate_capture(scene.frame, still, irp::ExposureConfig{}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(irp::ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_WienerRestore(benchmark::State& state) {
  const auto scene = irp::generate_procedural_scene(3, 64, 64);
  const auto cfg = irp::make_exposure_ladder(irp::ExposureConfig{})[7];
  const auto cap = irp::simulate_capture(scene.frame, scene.flow, cfg, 1);
  const auto psf = irp::motion_psf(scene.flow, cfg.delta_t);
  const irp::RestorerId id{irp::RestorerKind::WienerDeconv, {1e-2}, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(irp::restore(id, cap, &psf, cfg.gamma));
}
BENCHMARK(BM_WienerRestore);

void BM_PredictorForward(benchmark::State& state) {
  irp::PredictorConfig cfg;
  const irp::IrpPredictor model(cfg, 1);
  const auto scene = irp::generate_procedural_scene(4, 64, 64);
  const auto cap = irp::simulate_capture(scene.frame, scene.flow, irp::ExposureConfig{}, 1);
  const auto in = irp::prepare_input(cap, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(in));
}
BENCHMARK(BM_PredictorForward);

void BM_PredictorTrainStep(benchmark::State& state) {
  irp::PredictorConfig cfg;
  irp::IrpPredictor model(cfg, 1);
  const auto scene = irp::generate_procedural_scene(5, 64, 64);
  const auto cap = irp::simulate_capture(scene.frame, scene.flow, irp::ExposureConfig{}, 1);
  const auto in = irp::prepare_input(cap, cfg);
  const irp::nn::Tensor target({1}, std::vector<double>{0.5});
  for (auto _ : state) {
    model.parameters().zero_grad();
    irp::nn::backward(irp::nn::l1_loss(model.forward(in), target));
  }
}
BENCHMARK(BM_PredictorTrainStep);

}  // namespace

BENCHMARK_MAIN();
