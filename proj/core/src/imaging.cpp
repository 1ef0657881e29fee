#include "irp/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "irp/error.hpp"
#include "irp/rng.hpp"

namespace irp {

void ExposureConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("ExposureConfig: " + what); };
  if (!(delta_t > 0.0) || !std::isfinite(delta_t)) fail("delta_t must be > 0");
  if (!(gain > 0.0) || !std::isfinite(gain)) fail("gain must be > 0");
  if (!(full_well > 0.0)) fail("full_well must be > 0");
  if (!(read_sigma >= 0.0) || !std::isfinite(read_sigma)) fail("read_sigma must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (m_max < 1 || m_max > 65535) fail("m_max must be in [1, 65535]");
}

FlowField scale_flow_for_exposure(const FlowField& flow, const ExposureConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(flow.width()) * flow.height();
  std::vector<float> u(n), v(n);
  const auto su = flow.u_values();
  const auto sv = flow.v_values();
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = static_cast<float>(double(su[i]) * cfg.delta_t);
    v[i] = static_cast<float>(double(sv[i]) * cfg.delta_t);
  }
  return FlowField(flow.width(), flow.height(), std::move(u), std::move(v));
}

int default_substeps(const FlowField& scaled_flow) {
  return std::max(3, static_cast<int>(std::ceil(scaled_flow.max_magnitude())) + 1);
}

namespace {

double sample_bilinear(const Image<double>& img, double sx, double sy, int c) {
  const int w = img.width();
  const int h = img.height();
  sx = std::clamp(sx, 0.0, double(w - 1));
  sy = std::clamp(sy, 0.0, double(h - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace

LinearImage integrate_motion(const RadianceFrame& frame, const FlowField& flow,
                             const ExposureConfig& cfg, int substeps) {
  cfg.validate();
  if (frame.width() != flow.width() || frame.height() != flow.height()) {
    throw DimensionError("integrate_motion: frame is " + std::to_string(frame.width()) + "x" +
                         std::to_string(frame.height()) + " but flow is " +
                         std::to_string(flow.width()) + "x" + std::to_string(flow.height()));
  }
  if (substeps < 1) throw InvalidArgument("integrate_motion: substeps must be >= 1");

  const auto& src = frame.pixels();
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  const double scale = cfg.delta_t * cfg.gain / double(substeps);
  LinearImage out(w, h, ch, 0.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = flow.u(x, y);
      const double v = flow.v(x, y);
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < substeps; ++k) {
          const double frac = substeps == 1 ? 0.0 : double(k) / double(substeps - 1);
          acc += sample_bilinear(src, x + frac * u, y + frac * v, c);
        }
        out.at(x, y, c) = acc * scale;
      }
    }
  }
  return out;
}

LinearImage apply_shot_noise(const LinearImage& img, const ExposureConfig& cfg,
                             std::uint64_t rng_seed) {
  cfg.validate();
  Rng rng(derive_seed(rng_seed, seed_tag("shot")));
  LinearImage out = img;
  for (double& x : out.values()) {
    const double electrons = std::max(x, 0.0) * cfg.full_well;
    if (electrons <= 0.0) {
      x = 0.0;
      continue;
    }
    std::poisson_distribution<long long> dist(electrons);
    x = double(dist(rng)) / cfg.full_well;
  }
  return out;
}

LinearImage apply_read_noise(const LinearImage& img, const ExposureConfig& cfg,
                             std::uint64_t rng_seed) {
  cfg.validate();
  if (cfg.read_sigma == 0.0) return img;
  Rng rng(derive_seed(rng_seed, seed_tag("read")));
  std::normal_distribution<double> dist(0.0, cfg.read_sigma);
  LinearImage out = img;
  for (double& x : out.values()) x += dist(rng);
  return out;
}

QuantizedImage develop_to_srgb(const LinearImage& img, const ExposureConfig& cfg) {
  cfg.validate();
  Image<std::uint16_t> q(img.width(), img.height(), img.channels(), 0);
  const auto src = img.data();
  auto dst = q.data();
  const double m = cfg.m_max;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double x = std::clamp(src[i], 0.0, 1.0);
    const double code = std::floor(std::pow(x, cfg.gamma) * m + 0.5);
    dst[i] = static_cast<std::uint16_t>(std::clamp(code, 0.0, m));
  }
  return QuantizedImage(std::move(q), cfg.m_max);
}

double decode_linear(int code, int m_max, double gamma) {
  return std::pow(double(code) / double(m_max), 1.0 / gamma);
}

LinearImage linearize(const QuantizedImage& img, double gamma) {
  // Lookup table: the code range is small and pow() dominates otherwise.
  std::vector<double> lut(static_cast<std::size_t>(img.m_max()) + 1);
  for (int k = 0; k <= img.m_max(); ++k) lut[k] = decode_linear(k, img.m_max(), gamma);
  LinearImage out(img.width(), img.height(), img.channels(), 0.0);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

QuantizedImage simulate_capture(const RadianceFrame& frame, const FlowField& flow,
                                const ExposureConfig& cfg, std::uint64_t seed, int substeps) {
  const FlowField scaled = scale_flow_for_exposure(flow, cfg);
  const int steps = substeps > 0 ? substeps : default_substeps(scaled);
  LinearImage signal = integrate_motion(frame, scaled, cfg, steps);
  signal = apply_shot_noise(signal, cfg, seed);
  signal = apply_read_noise(signal, cfg, seed);
  return develop_to_srgb(signal, cfg);
}

QuantizedImage develop_reference(const RadianceFrame& frame, const ExposureConfig& cfg) {
  ExposureConfig ref = cfg;
  ref.delta_t = 1.0;
  ref.gain = 1.0;
  return develop_to_srgb(frame.pixels(), ref);
}

std::vector<ExposureConfig> make_exposure_ladder(const ExposureConfig& base, int count, double lo,
                                                 double hi) {
  if (count < 1) throw InvalidArgument("exposure ladder needs at least one entry");
  if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("exposure ladder range must satisfy 0 < lo <= hi");
  if (count > 1 && !(hi > lo)) throw InvalidArgument("exposure ladder must be strictly increasing");
  const double gain = 1.0 / std::sqrt(lo * hi);
  std::vector<ExposureConfig> ladder;
  ladder.reserve(count);
  for (int i = 0; i < count; ++i) {
    ExposureConfig cfg = base;
    cfg.delta_t = count == 1 ? std::sqrt(lo * hi)
                             : lo * std::pow(hi / lo, double(i) / double(count - 1));
    cfg.gain = gain;
    cfg.validate();
    ladder.push_back(cfg);
  }
  return ladder;
}

}  // namespace irp
