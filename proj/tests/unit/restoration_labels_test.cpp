#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "irp/error.hpp"
#include "irp/imaging.hpp"
#include "irp/labels.hpp"
#include "irp/restoration.hpp"
#include "irp/scene.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

namespace irp {
namespace {

constexpr double kGamma = 1.0 / 2.2;

// Bars and a ramp on a flat surround, so edge clamping agrees with the periodic model.
LinearImage strip_pattern(int w, int h) {
  LinearImage img(w, h, 1, 0.3);
  for (int y = 0; y < h; ++y)
    for (int x = w / 6; x < w - w / 6; ++x)
      img.at(x, y, 0) = 0.3 + 0.2 * std::sin(2 * std::numbers::pi * x / 9.0) + (x % 17 < 5 ? 0.3 : 0.0) + 0.002 * y;
  return img;
}

QuantizedImage encode(const LinearImage& img, int m_max) {
  ExposureConfig cfg;
  cfg.m_max = m_max;
  return develop_to_srgb(img, cfg);
}

double crop_psnr(const QuantizedImage& a, const QuantizedImage& b, int margin) {
  QuantizedImage ca(a.width() - 2 * margin, a.height() - 2 * margin, a.channels(), a.m_max());
  QuantizedImage cb = ca;
  for (int y = 0; y < ca.height(); ++y)
    for (int x = 0; x < ca.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) {
        ca.set(x, y, c, a.at(x + margin, y + margin, c));
        cb.set(x, y, c, b.at(x + margin, y + margin, c));
      }
  return psnr(ca, cb);
}

TEST(Restorers, IdentitySettingsPreserveInput) {
  const auto img = test::random_quantized(20, 20, 3, 255, 1);
  const auto g = restore({RestorerKind::GaussianDenoise, {0.0}, 1.0}, img, nullptr, kGamma);
  const auto b = restore({RestorerKind::BilateralDenoise, {0.0, 0.1}, 1.0}, img, nullptr, kGamma);
  const Psf psf = Psf::line(3, 1, 0);
  const auto rl = restore({RestorerKind::RichardsonLucy, {0.0, 0.0}, 1.0}, img, &psf, kGamma);
  for (const auto* out : {&g, &b, &rl}) {
    ASSERT_EQ(out->width(), 20);
    for (std::size_t i = 0; i < img.data().size(); ++i)
      ASSERT_LE(std::abs(int(out->data()[i]) - int(img.data()[i])), 1);
  }
}

TEST(Restorers, DeconvolutionNeedsPsf) {
  const auto img = test::random_quantized(16, 16, 1, 255, 2);
  EXPECT_THROW(restore({RestorerKind::WienerDeconv, {1e-3}, 1.0}, img, nullptr, kGamma), InvalidArgument);
  EXPECT_THROW(restore({RestorerKind::RichardsonLucy, {5, 0}, 1.0}, img, nullptr, kGamma), InvalidArgument);
}

TEST(Restorers, ParamValidation) {
  EXPECT_THROW((RestorerId{RestorerKind::GaussianDenoise, {-1.0}, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((RestorerId{RestorerKind::WienerDeconv, {0.0}, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((RestorerId{RestorerKind::RichardsonLucy, {5.0}, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW(parse_restorer("median"), InvalidArgument);
  for (auto k : kAllRestorers) EXPECT_EQ(parse_restorer(to_string(k)), k);
}

TEST(Restorers, WienerInvertsNoiselessBoxBlur) {
  const auto sharp = strip_pattern(96, 48);
  const Psf psf = Psf::line(4, 1, 0);
  const auto blurred = encode(apply_psf(sharp, psf), 65535);
  const auto reference = encode(sharp, 65535);
  const auto restored = restore({RestorerKind::WienerDeconv, {1e-7}, 1.0}, blurred, &psf, kGamma);
  EXPECT_LT(crop_psnr(blurred, reference, 12), 40.0);
  EXPECT_GE(crop_psnr(restored, reference, 12), 40.0);
}

TEST(Restorers, PsfLineHasUnitMass) {
  for (double len : {0.0, 1.0, 3.5, 7.0}) {
    const Psf psf = Psf::line(len, 0.6, 0.8);
    double total = 0.0;
    for (const auto& t : psf.taps()) total += t.weight;
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto grid = psf.rasterize();
    double gsum = 0.0;
    for (double v : grid.weights) gsum += v;
    EXPECT_NEAR(gsum, 1.0, 1e-12);
  }
}

TEST(Fitting, SingleCandidateGridReturnsIt) {
  const auto gt = test::random_quantized(16, 16, 1, 255, 3);
  const auto cap = test::random_quantized(16, 16, 1, 255, 4);
  FitSample s{&cap, &gt, std::nullopt};
  const std::vector<RestorerId> grid{{RestorerKind::GaussianDenoise, {1.3}, 1.0}};
  const auto fitted = fit_restorer_per_exposure(RestorerKind::GaussianDenoise, std::span(&s, 1), grid, kGamma);
  EXPECT_EQ(fitted.kind, RestorerKind::GaussianDenoise);
  EXPECT_EQ(fitted.params, grid[0].params);
}

TEST(Fitting, CleanInputsPickIdentity) {
  const auto gt = test::random_quantized(24, 24, 1, 255, 5);
  FitSample s{&gt, &gt, std::nullopt};
  const auto grid = default_grid(RestorerKind::GaussianDenoise);
  const auto fitted = fit_restorer_per_exposure(RestorerKind::GaussianDenoise, std::span(&s, 1), grid, kGamma);
  EXPECT_EQ(fitted.params[0], 0.0);
  EXPECT_DOUBLE_EQ(fitted.exposure_gain, 1.0);
}

TEST(Fitting, NoisiestExposureGetsStrongestDenoising) {
  const auto ladder = make_exposure_ladder(ExposureConfig{});
  std::vector<QuantizedImage> gts, shorts, longs;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto scene = generate_procedural_scene(seed, 48, 48);
    FlowField still(48, 48);
    gts.push_back(develop_reference(scene.frame, ladder.front()));
    shorts.push_back(simulate_capture(scene.frame, still, ladder.front(), seed));
    longs.push_back(simulate_capture(scene.frame, still, ladder[7], seed));
  }
  std::vector<FitSample> short_samples, long_samples;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    short_samples.push_back({&shorts[i], &gts[i], std::nullopt});
    long_samples.push_back({&longs[i], &gts[i], std::nullopt});
  }
  const auto grid = default_grid(RestorerKind::GaussianDenoise);
  const auto s = fit_restorer_per_exposure(RestorerKind::GaussianDenoise, short_samples, grid, kGamma);
  const auto l = fit_restorer_per_exposure(RestorerKind::GaussianDenoise, long_samples, grid, kGamma);
  EXPECT_GT(s.params[0], l.params[0]);
  EXPECT_GT(s.exposure_gain, 1.0);
}

TEST(Labels, IrpArithmetic) {
  const LabelOptions opts;
  EXPECT_DOUBLE_EQ(per_restorer_irp(50.0, 1.0, opts), 1.0);
  EXPECT_DOUBLE_EQ(per_restorer_irp(10.0, 0.0, opts), 0.0);
  EXPECT_DOUBLE_EQ(per_restorer_irp(30.0, 0.8, opts), 0.65);
  const std::vector<double> four{0.5, 0.6, 0.7, 0.8};
  EXPECT_NEAR(final_irp(four), 0.65, 1e-15);
  EXPECT_THROW(final_irp(std::vector<double>{0.5, 0.6, 0.7}), InvalidArgument);
}

TEST(Labels, PerfectCaptureScoresOne) {
  const auto gt = test::random_quantized(24, 24, 3, 255, 6);
  std::array<RestorerId, 4> ids{RestorerId{RestorerKind::GaussianDenoise, {0.0}, 1.0},
                                RestorerId{RestorerKind::BilateralDenoise, {0.0, 0.1}, 1.0},
                                RestorerId{RestorerKind::WienerDeconv, {1e-4}, 1.0},
                                RestorerId{RestorerKind::RichardsonLucy, {0.0, 0.0}, 1.0}};
  const auto rec = score_capture("s", 0, gt, gt, Psf(), ids, kGamma, {});
  EXPECT_EQ(rec.per_restorer[0].irp, 1.0);
  EXPECT_EQ(rec.per_restorer[3].irp, 1.0);
  EXPECT_GT(rec.final_irp, 0.95);
}

TEST(Labels, CsvAndJsonRoundTrip) {
  IrpRecord r;
  r.scene_id = "scene-0007";
  r.exposure_index = 4;
  for (std::size_t k = 0; k < 4; ++k) r.per_restorer[k] = {20.0 + 0.1 / 3 * k, 0.7 + 1e-9 * k, 0.4 + k / 7.0};
  r.final_irp = 0.123456789012345678;
  const std::vector<IrpRecord> recs{r, r};
  EXPECT_EQ(labels_from_csv(labels_to_csv(recs)), recs);
  EXPECT_THROW(labels_from_csv("nonsense\n1,2\n"), FormatError);

  FittedRestorers f;
  f.by_exposure.push_back({RestorerId{RestorerKind::GaussianDenoise, {0.6}, 1.7},
                           RestorerId{RestorerKind::BilateralDenoise, {2.0, 0.1}, 1.7},
                           RestorerId{RestorerKind::WienerDeconv, {3e-3}, 1.0 / 3.0},
                           RestorerId{RestorerKind::RichardsonLucy, {10, 0.7}, 1.7}});
  EXPECT_EQ(fitted_from_json(fitted_to_json(f)), f);
  test::TempDir dir;
  save_fitted(dir / "r.json", f);
  EXPECT_EQ(load_fitted(dir / "r.json"), f);
  save_labels(dir / "l.csv", recs);
  EXPECT_EQ(load_labels(dir / "l.csv"), recs);
}

TEST(Labels, ConsistencyMatrixShape) {
  std::vector<IrpRecord> recs;
  for (int i = 0; i < 25; ++i) {
    IrpRecord r;
    r.scene_id = "s";
    r.exposure_index = i;
    for (std::size_t k = 0; k < 4; ++k) r.per_restorer[k].irp = std::sin(i * 0.7 + k * 0.1) + 0.05 * k * i;
    recs.push_back(r);
  }
  const auto m = cross_restorer_consistency(recs);
  for (int a = 0; a < 4; ++a) {
    EXPECT_DOUBLE_EQ(m.srcc[a][a], 1.0);
    for (int b = 0; b < 4; ++b) EXPECT_DOUBLE_EQ(m.srcc[a][b], m.srcc[b][a]);
  }
  recs.resize(19);
  EXPECT_THROW(cross_restorer_consistency(recs), InvalidArgument);
}

TEST(Labels, NoisierCapturesScoreLower) {
  auto scene = generate_procedural_scene(11, 48, 48);
  FlowField still(48, 48);
  ExposureConfig cfg;
  const auto gt = develop_reference(scene.frame, cfg);
  std::array<RestorerId, 4> ids{RestorerId{RestorerKind::GaussianDenoise, {0.0}, 1.0},
                                RestorerId{RestorerKind::BilateralDenoise, {0.0, 0.1}, 1.0},
                                RestorerId{RestorerKind::WienerDeconv, {1e-2}, 1.0},
                                RestorerId{RestorerKind::RichardsonLucy, {0.0, 0.0}, 1.0}};
  double prev = 2.0;
  for (double sigma : {0.0, 0.02, 0.05, 0.1}) {
    cfg.read_sigma = sigma;
    cfg.full_well = 1e9;
    const auto cap = simulate_capture(scene.frame, still, cfg, 3);
    const double irp = score_capture("s", 0, cap, gt, Psf(), ids, kGamma, {}).final_irp;
    EXPECT_LT(irp, prev);
    prev = irp;
  }
}

}  // namespace
}  // namespace irp
