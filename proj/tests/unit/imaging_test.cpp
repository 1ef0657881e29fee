#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "irp/error.hpp"
#include "irp/imaging.hpp"
#include "support.hpp"

namespace irp {
namespace {

ExposureConfig noiseless() {
  ExposureConfig cfg;
  cfg.full_well = 1e12;
  cfg.read_sigma = 0.0;
  return cfg;
}

TEST(ScaleFlow, MultipliesByExposureTime) {
  auto flow = test::uniform_flow(2, 2, 1.2f, 0.4f);
  ExposureConfig cfg;
  cfg.delta_t = 2.5;
  const auto scaled = scale_flow_for_exposure(flow, cfg);
  EXPECT_NEAR(scaled.u(1, 1), 3.0, 1e-6);
  EXPECT_NEAR(scaled.v(0, 1), 1.0, 1e-6);

  cfg.delta_t = 0.5;
  const auto half = scale_flow_for_exposure(test::uniform_flow(1, 1, 4.0f, -2.0f), cfg);
  EXPECT_EQ(half.u(0, 0), 2.0f);
  EXPECT_EQ(half.v(0, 0), -1.0f);

  cfg.delta_t = 1.0;
  EXPECT_EQ(scale_flow_for_exposure(test::uniform_flow(1, 1, 3.0f, 0.0f), cfg).u(0, 0), 3.0f);
}

void expect_near_pixels(const LinearImage& a, const Image<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.values()[i], b.values()[i], tol) << "at " << i;
}

TEST(IntegrateMotion, ZeroFlowIsIdentity) {
  const auto frame = test::random_frame(9, 7, 3, 1);
  ExposureConfig cfg;
  for (int substeps : {1, 3, 8}) expect_near_pixels(integrate_motion(frame, FlowField(9, 7), cfg, substeps), frame.pixels(), 1e-15);
  EXPECT_EQ(integrate_motion(frame, FlowField(9, 7), cfg, 1), frame.pixels());
  cfg.delta_t = 2.0;
  cfg.gain = 0.5;
  expect_near_pixels(integrate_motion(frame, FlowField(9, 7), cfg, 4), frame.pixels(), 1e-15);
}

// Uniform horizontal flow of L pixels with L+1 substeps samples integer offsets 0..L, so
// interior pixels are a length-(L+1) box average of the row.
TEST(IntegrateMotion, UniformFlowMatchesBoxConvolution) {
  const int w = 32, L = 4;
  Image<double> row(w, 1, 1);
  for (int x = 0; x < w; ++x) row.at(x, 0, 0) = 0.5 + 0.4 * std::sin(0.7 * x) + 0.01 * x;
  const RadianceFrame frame(row);
  const auto out = integrate_motion(frame, test::uniform_flow(w, 1, L, 0.0f), ExposureConfig{}, L + 1);
  for (int x = 0; x + L < w; ++x) {
    double expected = 0.0;
    for (int k = 0; k <= L; ++k) expected += row.at(x + k, 0, 0) / (L + 1);
    EXPECT_NEAR(out.at(x, 0, 0), expected, 1e-6) << "x=" << x;
  }
}

TEST(IntegrateMotion, RejectsMismatchedFlow) {
  EXPECT_THROW(integrate_motion(test::random_frame(8, 8, 1, 0), FlowField(7, 8), ExposureConfig{}, 3),
               DimensionError);
}

TEST(ShotNoise, ZeroStaysZero) {
  const LinearImage zero(16, 16, 1, 0.0);
  EXPECT_EQ(apply_shot_noise(zero, ExposureConfig{}, 3), zero);
}

TEST(ShotNoise, MonteCarloMomentsMatchScaledPoisson) {
  const int n = 100000;
  const LinearImage img(n, 1, 1, 0.5);
  const auto out = apply_shot_noise(img, ExposureConfig{}, 11);
  const auto& v = out.values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n;
  EXPECT_GE(mean, 0.4979);
  EXPECT_LE(mean, 0.5021);
  EXPECT_NEAR(var, 0.0005, 0.05 * 0.0005);
}

TEST(ShotNoise, LargeWellConcentrates) {
  ExposureConfig cfg;
  cfg.full_well = 1e8;
  const auto out = apply_shot_noise(LinearImage(64, 64, 1, 0.25), cfg, 5);
  for (double x : out.values()) ASSERT_NEAR(x, 0.25, 1e-3);
}

TEST(ReadNoise, ZeroSigmaIsIdentity) {
  ExposureConfig cfg;
  cfg.read_sigma = 0.0;
  const auto img = test::random_frame(8, 8, 3, 2).pixels();
  EXPECT_EQ(apply_read_noise(img, cfg, 1), img);
}

TEST(ReadNoise, MonteCarloMoments) {
  const int n = 1000000;
  const auto out = apply_read_noise(LinearImage(n, 1, 1, 0.0), ExposureConfig{}, 21);
  const auto& v = out.values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  EXPECT_GE(mean, -4e-5);
  EXPECT_LE(mean, 4e-5);
  EXPECT_GE(sd, 0.0099);
  EXPECT_LE(sd, 0.0101);
}

TEST(ReadNoise, DeterministicForSeed) {
  const LinearImage img(32, 32, 1, 0.3);
  EXPECT_EQ(apply_read_noise(img, ExposureConfig{}, 9), apply_read_noise(img, ExposureConfig{}, 9));
  EXPECT_NE(apply_read_noise(img, ExposureConfig{}, 9), apply_read_noise(img, ExposureConfig{}, 10));
}

TEST(Develop, ClosedFormValues) {
  LinearImage img(3, 1, 1);
  img.at(0, 0, 0) = 0.0;
  img.at(1, 0, 0) = 1.0;
  img.at(2, 0, 0) = 0.5;
  const auto q = develop_to_srgb(img, ExposureConfig{});
  EXPECT_EQ(q.at(0, 0, 0), 0);
  EXPECT_EQ(q.at(1, 0, 0), 255);
  EXPECT_EQ(q.at(2, 0, 0), 186);
}

TEST(Develop, ClampsOutOfRange) {
  LinearImage img(2, 1, 1);
  img.at(0, 0, 0) = -0.3;
  img.at(1, 0, 0) = 7.0;
  const auto q = develop_to_srgb(img, ExposureConfig{});
  EXPECT_EQ(q.at(0, 0, 0), 0);
  EXPECT_EQ(q.at(1, 0, 0), 255);
}

TEST(Develop, MonotoneAndRoundTripsWithinOneLevel) {
  const ExposureConfig cfg;
  const int n = 2001;
  LinearImage ramp(n, 1, 1);
  for (int i = 0; i < n; ++i) ramp.at(i, 0, 0) = static_cast<double>(i) / (n - 1);
  const auto q = develop_to_srgb(ramp, cfg);
  for (int i = 1; i < n; ++i) ASSERT_LE(q.at(i - 1, 0, 0), q.at(i, 0, 0));
  const auto again = develop_to_srgb(linearize(q, cfg.gamma), cfg);
  for (int i = 0; i < n; ++i) ASSERT_LE(std::abs(int(again.at(i, 0, 0)) - int(q.at(i, 0, 0))), 1);
}

TEST(SimulateCapture, NoiselessStaticEqualsDevelopedFrame) {
  const auto frame = test::random_frame(16, 12, 3, 4);
  const auto cfg = noiseless();
  EXPECT_EQ(simulate_capture(frame, FlowField(16, 12), cfg, 0), develop_to_srgb(frame.pixels(), cfg));
  EXPECT_EQ(develop_reference(frame, cfg), develop_to_srgb(frame.pixels(), cfg));
}

TEST(SimulateCapture, Deterministic) {
  const auto frame = test::random_frame(16, 16, 3, 6);
  const auto flow = test::uniform_flow(16, 16, 2.5f, -1.0f);
  EXPECT_EQ(simulate_capture(frame, flow, ExposureConfig{}, 77), simulate_capture(frame, flow, ExposureConfig{}, 77));
}

TEST(SimulateCapture, ShorterExposureIsDarker) {
  const auto frame = test::constant_frame(16, 16, 1, 0.4);
  const FlowField flow(16, 16);
  double previous = -1.0;
  for (double dt : {0.125, 0.25, 0.5, 1.0}) {
    ExposureConfig cfg;
    cfg.delta_t = dt;
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 16; ++s) mean += simulate_capture(frame, flow, cfg, s).mean() / 16.0;
    EXPECT_GT(mean, previous) << "delta_t=" << dt;
    previous = mean;
  }
}

TEST(ExposureConfig, ValidateNamesField) {
  ExposureConfig cfg;
  cfg.gamma = 0.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
  cfg = ExposureConfig{};
  cfg.delta_t = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(ExposureLadder, GeometricWithUnitMidpoint) {
  const auto ladder = make_exposure_ladder(ExposureConfig{}, 11, 1.0 / 32.0, 4.0);
  ASSERT_EQ(ladder.size(), 11u);
  EXPECT_DOUBLE_EQ(ladder.front().delta_t, 1.0 / 32.0);
  EXPECT_NEAR(ladder.back().delta_t, 4.0, 1e-12);
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    EXPECT_GT(ladder[i].delta_t, ladder[i - 1].delta_t);
    EXPECT_NEAR(ladder[i].delta_t / ladder[i - 1].delta_t, std::pow(128.0, 0.1), 1e-9);
  }
  EXPECT_NEAR(ladder[5].delta_t * ladder[5].gain, 1.0, 1e-12);
}

}  // namespace
}  // namespace irp
