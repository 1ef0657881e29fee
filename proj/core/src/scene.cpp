#include "irp/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "irp/error.hpp"
#include "irp/rng.hpp"

namespace irp {
namespace {

using Color = std::array<double, 3>;

Color random_color(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

// Sum of a few random low-frequency cosine modes, roughly unit amplitude.
struct SmoothField {
  struct Mode {
    double kx, ky, phase, amp;
  };
  std::vector<Mode> modes;

  SmoothField(Rng& rng, int count, double max_cycles, int width, int height) {
    for (int i = 0; i < count; ++i) {
      const double cx = uniform(rng, -max_cycles, max_cycles);
      const double cy = uniform(rng, -max_cycles, max_cycles);
      modes.push_back({2.0 * std::numbers::pi * cx / width, 2.0 * std::numbers::pi * cy / height,
                       uniform(rng, 0.0, 2.0 * std::numbers::pi), uniform(rng, 0.5, 1.0)});
    }
  }

  double operator()(double x, double y) const {
    double s = 0.0;
    for (const auto& m : modes) s += m.amp * std::cos(m.kx * x + m.ky * y + m.phase);
    return s / std::sqrt(double(std::max<std::size_t>(1, modes.size())));
  }
};

}  // namespace

ProceduralScene generate_procedural_scene(std::uint64_t seed, int width, int height,
                                          const ProceduralOptions& opts) {
  if (width < 16 || height < 16) throw InvalidArgument("procedural scene needs dimensions >= 16");
  if (!(opts.max_flow >= 0.0)) throw InvalidArgument("max_flow must be >= 0");

  Rng rng = make_rng(seed, "scene.content");
  Image<double> img(width, height, 3, 0.0);
  const double diag = std::hypot(double(width), double(height));

  // Oriented gradient background.
  {
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Color c0 = random_color(rng, 0.05, 0.6);
    const Color c1 = random_color(rng, 0.05, 0.6);
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double t = std::clamp(0.5 + ((x - width / 2.0) * dx + (y - height / 2.0) * dy) / diag, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = c0[c] * (1.0 - t) + c1[c] * t;
      }
    }
  }

  // Step edges: opaque rotated rectangles.
  const int rects = 3 + static_cast<int>(rng() % 4);
  for (int r = 0; r < rects; ++r) {
    const double cx = uniform(rng, 0.0, width), cy = uniform(rng, 0.0, height);
    const double hw = uniform(rng, 0.08, 0.3) * width, hh = uniform(rng, 0.08, 0.3) * height;
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double ct = std::cos(theta), st = std::sin(theta);
    const Color col = random_color(rng, 0.0, 0.95);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double lx = (x - cx) * ct + (y - cy) * st;
        const double ly = -(x - cx) * st + (y - cy) * ct;
        if (std::abs(lx) <= hw && std::abs(ly) <= hh) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
        }
      }
    }
  }

  // Grating patch: high-frequency content that blur destroys first.
  {
    const double cx = uniform(rng, 0.2, 0.8) * width, cy = uniform(rng, 0.2, 0.8) * height;
    const double radius = uniform(rng, 0.15, 0.3) * std::min(width, height);
    const double period = uniform(rng, 3.0, 7.0);
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double kx = std::cos(theta) * 2.0 * std::numbers::pi / period;
    const double ky = std::sin(theta) * 2.0 * std::numbers::pi / period;
    const Color lo = random_color(rng, 0.0, 0.3);
    const Color hi = random_color(rng, 0.5, 0.95);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (std::hypot(x - cx, y - cy) > radius) continue;
        const double t = 0.5 + 0.5 * std::cos(kx * x + ky * y);
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = lo[c] * (1.0 - t) + hi[c] * t;
      }
    }
  }

  // Smooth additive/subtractive blobs.
  const int blobs = 4 + static_cast<int>(rng() % 5);
  for (int b = 0; b < blobs; ++b) {
    const double cx = uniform(rng, 0.0, width), cy = uniform(rng, 0.0, height);
    const double sigma = uniform(rng, 0.04, 0.15) * std::min(width, height);
    Color amp = random_color(rng, -0.25, 0.25);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double g = std::exp(-0.5 * d2 / (sigma * sigma));
        for (int c = 0; c < 3; ++c) img.at(x, y, c) += amp[c] * g;
      }
    }
  }
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);

  // Flow: translation plus smooth perturbation, rescaled to respect the cap.
  Rng frng = make_rng(seed, "scene.flow");
  FlowField flow(width, height);
  if (opts.max_flow > 0.0) {
    const double theta = uniform(frng, 0.0, 2.0 * std::numbers::pi);
    const double mag = uniform(frng, opts.translation_lo, opts.translation_hi) * opts.max_flow;
    const double tu = mag * std::cos(theta), tv = mag * std::sin(theta);
    const double perturb = uniform(frng, 0.05, 0.25) * opts.max_flow;
    SmoothField fu(frng, 3, 1.5, width, height);
    SmoothField fv(frng, 3, 1.5, width, height);
    std::vector<double> u(static_cast<std::size_t>(width) * height), v(u.size());
    double peak = 0.0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto i = static_cast<std::size_t>(y) * width + x;
        u[i] = tu + perturb * fu(x, y);
        v[i] = tv + perturb * fv(x, y);
        peak = std::max(peak, std::hypot(u[i], v[i]));
      }
    }
    // Leave a little headroom so float rounding cannot push a vector past the cap.
    const double shrink = peak > opts.max_flow ? opts.max_flow * (1.0 - 1e-6) / peak : 1.0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto i = static_cast<std::size_t>(y) * width + x;
        flow.set(x, y, static_cast<float>(u[i] * shrink), static_cast<float>(v[i] * shrink));
      }
    }
  }
  return {RadianceFrame(std::move(img)), std::move(flow)};
}

void SceneSpec::validate() const {
  if (exposure_ladder.empty()) throw InvalidArgument("scene " + scene_id + ": empty exposure ladder");
  for (std::size_t i = 0; i < exposure_ladder.size(); ++i) {
    exposure_ladder[i].validate();
    if (i > 0 && !(exposure_ladder[i].delta_t > exposure_ladder[i - 1].delta_t)) {
      throw InvalidArgument("scene " + scene_id + ": exposure ladder must be strictly increasing in delta_t");
    }
  }
  if (ground_truth.width() != flow.width() || ground_truth.height() != flow.height()) {
    throw DimensionError("scene " + scene_id + ": flow and ground truth differ in size");
  }
}

std::vector<QuantizedImage> generate_scene_captures(const SceneSpec& spec) {
  spec.validate();
  std::vector<QuantizedImage> out;
  out.reserve(spec.exposure_ladder.size());
  for (std::size_t i = 0; i < spec.exposure_ladder.size(); ++i) {
    out.push_back(simulate_capture(spec.ground_truth, spec.flow, spec.exposure_ladder[i],
                                   capture_seed(spec.base_seed, static_cast<int>(i))));
  }
  return out;
}

}  // namespace irp
