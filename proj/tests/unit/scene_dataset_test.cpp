#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/manifest.hpp"
#include "irp/scene.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

namespace irp {
namespace {

TEST(ProceduralScene, DeterministicInSeed) {
  const auto a = generate_procedural_scene(0, 48, 40);
  const auto b = generate_procedural_scene(0, 48, 40);
  EXPECT_EQ(a.frame, b.frame);
  EXPECT_EQ(a.flow, b.flow);
  EXPECT_NE(a.frame, generate_procedural_scene(1, 48, 40).frame);
}

TEST(ProceduralScene, BoundedTexturedAndFlowCapped) {
  ProceduralOptions opts;
  opts.max_flow = 5.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = generate_procedural_scene(seed, 32, 32, opts);
    const auto& v = s.frame.pixels().values();
    double mean = 0.0, var = 0.0;
    for (double x : v) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
      mean += x;
    }
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    EXPECT_GT(var, 1e-4) << "seed " << seed;
    EXPECT_LE(s.flow.max_magnitude(), opts.max_flow) << "seed " << seed;
  }
}

TEST(ProceduralScene, RejectsTinyImages) { EXPECT_THROW(generate_procedural_scene(0, 8, 32), InvalidArgument); }

SceneSpec spec_with_ladder(std::vector<ExposureConfig> ladder) {
  auto content = generate_procedural_scene(3, 32, 32);
  SceneSpec spec;
  spec.scene_id = "s";
  spec.ground_truth = content.frame;
  spec.flow = content.flow;
  spec.exposure_ladder = std::move(ladder);
  spec.base_seed = 99;
  return spec;
}

TEST(SceneCaptures, NoiselessSingletonEqualsDevelopedTruth) {
  ExposureConfig cfg;
  cfg.full_well = 1e12;
  cfg.read_sigma = 0.0;
  auto spec = spec_with_ladder({cfg});
  spec.flow = FlowField(32, 32);
  const auto caps = generate_scene_captures(spec);
  ASSERT_EQ(caps.size(), 1u);
  // A huge full well leaves ~1e-6 relative shot noise, which can flip a rounding.
  const auto ref = develop_reference(spec.ground_truth, cfg);
  int differing = 0;
  for (std::size_t i = 0; i < ref.data().size(); ++i) {
    const int d = std::abs(int(caps[0].data()[i]) - int(ref.data()[i]));
    EXPECT_LE(d, 1);
    differing += d != 0;
  }
  EXPECT_LE(differing, static_cast<int>(ref.data().size() / 100));
}

TEST(SceneCaptures, LadderShapeAndOrderValidation) {
  const auto ladder = make_exposure_ladder(ExposureConfig{});
  const auto caps = generate_scene_captures(spec_with_ladder(ladder));
  ASSERT_EQ(caps.size(), 11u);
  for (const auto& c : caps) {
    EXPECT_EQ(c.width(), 32);
    EXPECT_EQ(c.height(), 32);
    EXPECT_EQ(c.channels(), 3);
  }
  auto reversed = ladder;
  std::swap(reversed.front(), reversed.back());
  EXPECT_THROW(generate_scene_captures(spec_with_ladder(reversed)), InvalidArgument);
  EXPECT_THROW(generate_scene_captures(spec_with_ladder({})), InvalidArgument);
}

// Noise: RMS linear difference between a capture and its noiseless twin, relative to the
// twin's mean. Blur: gradient energy of the exposure-normalised noiseless capture
// relative to the radiance frame.
double gradient_energy(const Image<double>& img, double scale) {
  double e = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x + 1 < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const double d = (img.at(x + 1, y, c) - img.at(x, y, c)) / scale;
        e += d * d;
      }
  return e;
}

double relative_noise(const QuantizedImage& noisy, const QuantizedImage& clean, double gamma) {
  const auto a = linearize(noisy, gamma), b = linearize(clean, gamma);
  double se = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    se += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
    mean += b.values()[i];
  }
  const double n = static_cast<double>(a.size());
  return std::sqrt(se / n) / (mean / n);
}

TEST(SceneCaptures, ShortExposureNoisiestLongExposureBlurriest) {
  const auto ladder = make_exposure_ladder(ExposureConfig{});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto content = generate_procedural_scene(seed, 48, 48);
    SceneSpec spec{"s", content.frame, content.flow, ladder, seed};
    const auto caps = generate_scene_captures(spec);
    const double truth = gradient_energy(content.frame.pixels(), 1.0);
    std::vector<double> noise, attenuation;
    for (std::size_t k = 0; k < caps.size(); ++k) {
      auto clean_cfg = ladder[k];
      clean_cfg.full_well = 1e12;
      clean_cfg.read_sigma = 0.0;
      const auto clean = simulate_capture(content.frame, content.flow, clean_cfg, 0);
      noise.push_back(relative_noise(caps[k], clean, clean_cfg.gamma));
      const double exposure = clean_cfg.delta_t * clean_cfg.gain;
      attenuation.push_back(1.0 - gradient_energy(linearize(clean, clean_cfg.gamma), exposure) / truth);
    }
    EXPECT_EQ(std::max_element(noise.begin(), noise.end()) - noise.begin(), 0) << "seed " << seed;
    // A fully saturated long exposure has no gradients left, which can tie with its neighbour.
    EXPECT_EQ(*std::max_element(attenuation.begin(), attenuation.end()), attenuation.back()) << "seed " << seed;
  }
}

TEST(CaptureIo, IrpqTestVector) {
  QuantizedImage img(2, 2, 1, 1023);
  img.set(0, 0, 0, 0);
  img.set(1, 0, 0, 1);
  img.set(0, 1, 0, 256);
  img.set(1, 1, 0, 1023);
  const std::vector<std::uint8_t> expected{'I', 'R', 'P', 'Q', 0x02, 0x00, 0x02, 0x00, 0x00, 0x00,
                                           0x01, 0x00, 0x00, 0x01, 0xFF, 0x03};
  EXPECT_EQ(encode_irpq(img), expected);
  EXPECT_EQ(decode_irpq(expected, 1023), img);
}

TEST(CaptureIo, RoundTripsPngAndIrpq) {
  test::TempDir dir;
  for (int m_max : {255, 1023, 65535}) {
    for (int channels : {1, 3}) {
      const auto img = test::random_quantized(13, 7, channels, m_max, m_max + channels);
      const auto path = dir / ("cap" + std::to_string(m_max) + "_" + std::to_string(channels) + capture_extension(m_max));
      write_capture(path, img);
      EXPECT_EQ(read_capture(path, m_max), img);
    }
  }
}

TEST(CaptureIo, TruncatedAndMissingFilesAreTypedErrors) {
  test::TempDir dir;
  auto bytes = encode_irpq(test::random_quantized(4, 4, 3, 1023, 1));
  bytes.pop_back();
  EXPECT_THROW(decode_irpq(bytes, 1023), FormatError);

  const auto png = dir / "x.png";
  write_capture(png, test::random_quantized(8, 8, 3, 255, 2));
  auto png_bytes = read_file_bytes(png);
  png_bytes.resize(png_bytes.size() / 2);
  write_file_bytes(png, png_bytes);
  EXPECT_THROW(read_capture(png), FormatError);

  write_file_bytes(dir / "junk.bin", {1, 2, 3});
  EXPECT_THROW(read_capture(dir / "junk.bin"), FormatError);

  try {
    read_capture(dir / "absent.png");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.png"), std::string::npos);
  }
}

TEST(FlowIo, TestVectorAndMagic) {
  FlowField f(1, 1);
  f.set(0, 0, 1.5f, -2.0f);
  const std::vector<std::uint8_t> expected{0x50, 0x49, 0x45, 0x48, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00,
                                           0x00, 0x00, 0x00, 0x00, 0xC0, 0x3F, 0x00, 0x00, 0x00, 0xC0};
  const auto bytes = encode_flo(f);
  EXPECT_EQ(bytes, expected);
  float magic;
  std::memcpy(&magic, bytes.data(), 4);
  EXPECT_EQ(magic, 202021.25f);
  EXPECT_EQ(decode_flo(bytes), f);
}

TEST(FlowIo, RoundTripAndRejectsMalformed) {
  test::TempDir dir;
  const auto flow = generate_procedural_scene(4, 20, 17).flow;
  write_flow(dir / "f.flo", flow);
  EXPECT_EQ(read_flow(dir / "f.flo"), flow);

  auto bytes = encode_flo(flow);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_flo(bytes), FormatError);
  bytes = encode_flo(flow);
  bytes[0] ^= 0xFF;
  EXPECT_THROW(decode_flo(bytes), FormatError);
}

std::vector<SceneEntry> dummy_scenes(int n) {
  std::vector<SceneEntry> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].scene_id = scene_id_for(i);
  return out;
}

TEST(Manifest, SplitCounts) {
  EXPECT_EQ(split_counts(10), (SplitCounts{7, 1, 2}));
  EXPECT_EQ(split_counts(2500), (SplitCounts{1750, 250, 500}));
  EXPECT_EQ(split_counts(40), (SplitCounts{28, 4, 8}));

  const auto m = build_manifest(dummy_scenes(10), 5);
  EXPECT_EQ(m.scenes_in(Split::Train).size(), 7u);
  EXPECT_EQ(m.scenes_in(Split::Val).size(), 1u);
  EXPECT_EQ(m.scenes_in(Split::Test).size(), 2u);
}

TEST(Manifest, SplitIsDeterministicAndDisjoint) {
  const auto a = build_manifest(dummy_scenes(50), 17);
  const auto b = build_manifest(dummy_scenes(50), 17);
  EXPECT_EQ(a, b);
  std::set<std::string> seen;
  for (auto s : {Split::Train, Split::Val, Split::Test})
    for (const auto* e : a.scenes_in(s)) EXPECT_TRUE(seen.insert(e->scene_id).second);
  EXPECT_EQ(seen.size(), 50u);
  const auto c = build_manifest(dummy_scenes(50), 18);
  bool differs = false;
  for (std::size_t i = 0; i < 50; ++i) differs = differs || a.scenes[i].split != c.scenes[i].split;
  EXPECT_TRUE(differs);
}

TEST(Manifest, RejectsDuplicatesAndEmpty) {
  auto scenes = dummy_scenes(3);
  scenes[2].scene_id = scenes[0].scene_id;
  EXPECT_THROW(build_manifest(scenes, 0), InvalidArgument);
  EXPECT_THROW(build_manifest({}, 0), InvalidArgument);
}

TEST(Dataset, GeneratesVerifiesAndRegenerates) {
  test::TempDir a, b;
  DatasetOptions opts;
  opts.scenes = 4;
  opts.width = 24;
  opts.height = 20;
  opts.seed = 7;
  opts.ladder_size = 3;
  const auto m = generate_dataset(opts, a.path(), 1);
  const auto m2 = generate_dataset(opts, b.path(), 3);
  EXPECT_EQ(manifest_to_json(m), manifest_to_json(m2));
  EXPECT_EQ(read_file_bytes(a / "manifest.json"), read_file_bytes(b / "manifest.json"));
  EXPECT_EQ(load_manifest(a / "manifest.json"), m);
  EXPECT_NO_THROW(verify_manifest_files(m, a.path()));

  // Regenerating from the recorded seeds reproduces every capture.
  for (const auto& scene : m.scenes) {
    const auto caps = generate_scene_captures(scene_spec_for(m, scene));
    ASSERT_EQ(caps.size(), scene.captures.size());
    for (std::size_t k = 0; k < caps.size(); ++k) {
      const auto path = b / "regen.png";
      write_capture(path, caps[k]);
      EXPECT_EQ(file_checksum(path), scene.captures[k].file.checksum);
    }
  }

  // Corrupt one capture.
  const auto victim = a.path() / m.scenes[1].captures[0].file.path;
  auto bytes = read_file_bytes(victim);
  bytes[bytes.size() / 2] ^= 0x55;
  write_file_bytes(victim, bytes);
  EXPECT_THROW(verify_manifest_files(m, a.path()), FormatError);
}

TEST(Manifest, JsonRejectsGarbage) {
  EXPECT_THROW(manifest_from_json("{not json"), FormatError);
  EXPECT_THROW(manifest_from_json("{\"version\": \"other\"}"), FormatError);
}

}  // namespace
}  // namespace irp
