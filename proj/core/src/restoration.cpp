#include "irp/restoration.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "irp/error.hpp"
#include "irp/imaging.hpp"
#include "irp/metrics.hpp"
#include "irp/parallel.hpp"

namespace irp {

std::string_view to_string(RestorerKind k) {
  switch (k) {
    case RestorerKind::GaussianDenoise: return "gaussian-denoise";
    case RestorerKind::BilateralDenoise: return "bilateral-denoise";
    case RestorerKind::WienerDeconv: return "wiener-deconv";
    case RestorerKind::RichardsonLucy: return "richardson-lucy";
  }
  return "gaussian-denoise";
}

RestorerKind parse_restorer(std::string_view name) {
  for (auto k : kAllRestorers) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown restorer '" + std::string(name) + "'");
}

bool needs_psf(RestorerKind k) {
  return k == RestorerKind::WienerDeconv || k == RestorerKind::RichardsonLucy;
}

void RestorerId::validate() const {
  const std::string name(to_string(kind));
  auto fail = [&](const std::string& what) { throw InvalidArgument(name + ": " + what); };
  auto arity = [&](std::size_t n) {
    if (params.size() != n) fail("expects " + std::to_string(n) + " hyperparameters");
  };
  if (!(exposure_gain > 0.0) || !std::isfinite(exposure_gain)) fail("exposure_gain must be > 0");
  switch (kind) {
    case RestorerKind::GaussianDenoise:
      arity(1);
      if (!(params[0] >= 0.0 && params[0] <= 5.0)) fail("sigma must be in [0, 5]");
      break;
    case RestorerKind::BilateralDenoise:
      arity(2);
      if (!(params[0] >= 0.0 && params[0] <= 5.0)) fail("sigma_s must be in [0, 5]");
      if (!(params[1] > 0.0 && params[1] <= 1.0)) fail("sigma_r must be in (0, 1]");
      break;
    case RestorerKind::WienerDeconv:
      arity(1);
      if (!(params[0] > 0.0 && params[0] <= 10.0)) fail("lambda must be in (0, 10]");
      break;
    case RestorerKind::RichardsonLucy:
      arity(2);
      if (!(params[0] >= 0.0 && params[0] <= 200.0) || params[0] != std::floor(params[0])) {
        fail("iterations must be an integer in [0, 200]");
      }
      if (!(params[1] >= 0.0 && params[1] <= 5.0)) fail("pre_sigma must be in [0, 5]");
      break;
  }
}

std::string RestorerId::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "(";
  for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
  os << "; gain=" << exposure_gain << ")";
  return os.str();
}

Psf::Psf(std::vector<PsfTap> taps) : taps_(std::move(taps)) {
  if (taps_.empty()) throw InvalidArgument("PSF needs at least one tap");
  double total = 0.0;
  for (const auto& t : taps_) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.dx) || !std::isfinite(t.dy)) {
      throw InvalidArgument("PSF taps must be finite with non-negative weight");
    }
    total += t.weight;
  }
  if (!(total > 0.0)) throw InvalidArgument("PSF weights must not all be zero");
  for (auto& t : taps_) t.weight /= total;
}

Psf Psf::line(double length, double dir_x, double dir_y) {
  const double norm = std::hypot(dir_x, dir_y);
  if (!(length >= 0.0)) throw InvalidArgument("PSF length must be >= 0");
  const int n = static_cast<int>(std::lround(length)) + 1;
  if (n == 1 || norm == 0.0) return Psf();
  const double ux = dir_x / norm, uy = dir_y / norm;
  std::vector<PsfTap> taps;
  for (int k = 0; k < n; ++k) {
    const double s = length * double(k) / double(n - 1);
    taps.push_back({s * ux, s * uy, 1.0});
  }
  return Psf(std::move(taps));
}

Psf::Grid Psf::rasterize() const {
  double minx = 0, maxx = 0, miny = 0, maxy = 0;
  for (const auto& t : taps_) {
    minx = std::min(minx, std::floor(t.dx));
    maxx = std::max(maxx, std::floor(t.dx) + 1);
    miny = std::min(miny, std::floor(t.dy));
    maxy = std::max(maxy, std::floor(t.dy) + 1);
  }
  Grid g;
  g.x0 = static_cast<int>(minx);
  g.y0 = static_cast<int>(miny);
  g.width = static_cast<int>(maxx - minx) + 1;
  g.height = static_cast<int>(maxy - miny) + 1;
  g.weights.assign(static_cast<std::size_t>(g.width) * g.height, 0.0);
  for (const auto& t : taps_) {
    const int ix = static_cast<int>(std::floor(t.dx));
    const int iy = static_cast<int>(std::floor(t.dy));
    const double fx = t.dx - ix, fy = t.dy - iy;
    auto add = [&](int x, int y, double w) {
      if (w == 0.0) return;
      g.weights[static_cast<std::size_t>(y - g.y0) * g.width + (x - g.x0)] += w;
    };
    add(ix, iy, t.weight * (1 - fx) * (1 - fy));
    add(ix + 1, iy, t.weight * fx * (1 - fy));
    add(ix, iy + 1, t.weight * (1 - fx) * fy);
    add(ix + 1, iy + 1, t.weight * fx * fy);
  }
  return g;
}

Psf motion_psf(const FlowField& flow, double delta_t) {
  const auto [mu, mv] = flow.mean_vector();
  return Psf::line(flow.mean_magnitude() * delta_t, mu, mv);
}

namespace {

struct SparseKernel {
  struct Cell {
    int dx, dy;
    double w;
  };
  std::vector<Cell> cells;

  explicit SparseKernel(const Psf& psf) {
    const auto g = psf.rasterize();
    for (int j = 0; j < g.height; ++j) {
      for (int i = 0; i < g.width; ++i) {
        const double w = g.weights[static_cast<std::size_t>(j) * g.width + i];
        if (w != 0.0) cells.push_back({g.x0 + i, g.y0 + j, w});
      }
    }
  }
};

// sign = +1 applies the PSF, sign = -1 applies its adjoint.
LinearImage correlate(const LinearImage& img, const SparseKernel& k, int sign) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  LinearImage out(w, h, ch, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& cell : k.cells) {
        const int sx = std::clamp(x + sign * cell.dx, 0, w - 1);
        const int sy = std::clamp(y + sign * cell.dy, 0, h - 1);
        for (int c = 0; c < ch; ++c) out.at(x, y, c) += cell.w * img.at(sx, sy, c);
      }
    }
  }
  return out;
}

LinearImage gaussian_blur(const LinearImage& img, double sigma) {
  if (sigma <= 1e-9) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + radius];
  }
  for (double& t : taps) t /= total;
  const int w = img.width(), h = img.height(), ch = img.channels();
  LinearImage tmp(w, h, ch, 0.0), out(w, h, ch, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += taps[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += taps[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

LinearImage bilateral(const LinearImage& img, double sigma_s, double sigma_r) {
  if (sigma_s <= 1e-9) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma_s)));
  const int side = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int j = -radius; j <= radius; ++j) {
    for (int i = -radius; i <= radius; ++i) {
      spatial[(j + radius) * side + (i + radius)] = std::exp(-0.5 * (i * i + j * j) / (sigma_s * sigma_s));
    }
  }
  const int w = img.width(), h = img.height(), ch = img.channels();
  const double inv_range = 1.0 / (2.0 * sigma_r * sigma_r * ch);
  LinearImage out(w, h, ch, 0.0);
  std::vector<double> acc(ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double norm = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int sy = std::clamp(y + j, 0, h - 1);
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, w - 1);
          double d2 = 0.0;
          for (int c = 0; c < ch; ++c) {
            const double d = img.at(sx, sy, c) - img.at(x, y, c);
            d2 += d * d;
          }
          const double wgt = spatial[(j + radius) * side + (i + radius)] * std::exp(-d2 * inv_range);
          norm += wgt;
          for (int c = 0; c < ch; ++c) acc[c] += wgt * img.at(sx, sy, c);
        }
      }
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = acc[c] / norm;
    }
  }
  return out;
}

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffers {
  int width, height;
  double* real;
  fftw_complex* spec;
  fftw_plan forward;
  fftw_plan inverse;

  FftwBuffers(int w, int h) : width(w), height(h) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t nc = static_cast<std::size_t>(h) * (w / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(nc);
    // ESTIMATE keeps the chosen algorithm, and hence the rounding, reproducible.
    forward = fftw_plan_dft_r2c_2d(h, w, real, spec, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(h, w, spec, real, FFTW_ESTIMATE);
  }
  ~FftwBuffers() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
    fftw_free(real);
    fftw_free(spec);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;

  std::size_t spectrum_size() const { return static_cast<std::size_t>(height) * (width / 2 + 1); }

  std::vector<std::complex<double>> transform_kernel(const std::map<std::pair<int, int>, double>& taps) {
    std::fill(real, real + static_cast<std::size_t>(width) * height, 0.0);
    for (const auto& [pos, w] : taps) {
      const int x = ((pos.first % width) + width) % width;
      const int y = ((pos.second % height) + height) % height;
      real[static_cast<std::size_t>(y) * width + x] += w;
    }
    fftw_execute(forward);
    std::vector<std::complex<double>> out(spectrum_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec[i][0], spec[i][1]};
    return out;
  }
};

LinearImage wiener_deconvolve(const LinearImage& img, const Psf& psf, double lambda) {
  const auto grid = psf.rasterize();
  const int extent = std::max({std::abs(grid.x0), std::abs(grid.x0 + grid.width - 1),
                               std::abs(grid.y0), std::abs(grid.y0 + grid.height - 1)});
  const int margin = 2 * extent + 8;
  const int w = img.width(), h = img.height(), ch = img.channels();
  const int pw = w + 2 * margin, ph = h + 2 * margin;
  FftwBuffers fft(pw, ph);

  // y = g * f with g(q) = K(-q), so the kernel tap at offset o lands at -o.
  std::map<std::pair<int, int>, double> psf_taps;
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const double wgt = grid.weights[static_cast<std::size_t>(j) * grid.width + i];
      if (wgt != 0.0) psf_taps[{-(grid.x0 + i), -(grid.y0 + j)}] += wgt;
    }
  }
  const auto H = fft.transform_kernel(psf_taps);
  const auto L = fft.transform_kernel({{{0, 0}, 4.0}, {{1, 0}, -1.0}, {{-1, 0}, -1.0}, {{0, 1}, -1.0}, {{0, -1}, -1.0}});
  std::vector<std::complex<double>> filter(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    const double denom = std::norm(H[i]) + lambda * std::norm(L[i]);
    filter[i] = denom > 0.0 ? std::conj(H[i]) / denom : std::complex<double>(1.0, 0.0);
  }

  const double scale = 1.0 / (double(pw) * ph);
  LinearImage out(w, h, ch, 0.0);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = std::clamp(y - margin, 0, h - 1);
      for (int x = 0; x < pw; ++x) {
        const int sx = std::clamp(x - margin, 0, w - 1);
        fft.real[static_cast<std::size_t>(y) * pw + x] = img.at(sx, sy, c);
      }
    }
    fftw_execute(fft.forward);
    for (std::size_t i = 0; i < filter.size(); ++i) {
      const std::complex<double> v = std::complex<double>(fft.spec[i][0], fft.spec[i][1]) * filter[i];
      fft.spec[i][0] = v.real();
      fft.spec[i][1] = v.imag();
    }
    fftw_execute(fft.inverse);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(x, y, c) = fft.real[static_cast<std::size_t>(y + margin) * pw + (x + margin)] * scale;
      }
    }
  }
  return out;
}

LinearImage richardson_lucy(const LinearImage& img, const Psf& psf, int iterations, double pre_sigma) {
  LinearImage observed = gaussian_blur(img, pre_sigma);
  for (double& v : observed.values()) v = std::max(v, 0.0);
  if (iterations == 0) return observed;
  const SparseKernel k(psf);
  LinearImage estimate = observed;
  constexpr double kFloor = 1e-6;
  for (int it = 0; it < iterations; ++it) {
    const LinearImage blurred = correlate(estimate, k, +1);
    LinearImage ratio = observed;
    auto r = ratio.data();
    const auto b = blurred.data();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = r[i] / std::max(b[i], kFloor);
    const LinearImage correction = correlate(ratio, k, -1);
    auto e = estimate.data();
    const auto cor = correction.data();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] *= cor[i];
  }
  return estimate;
}

LinearImage encode_gamma(const LinearImage& lin, double gamma) {
  LinearImage out = lin;
  for (double& v : out.values()) v = std::pow(std::clamp(v, 0.0, 1.0), gamma);
  return out;
}

QuantizedImage quantize_encoded(const LinearImage& enc, int m_max) {
  Image<std::uint16_t> q(enc.width(), enc.height(), enc.channels(), 0);
  const auto src = enc.data();
  auto dst = q.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double code = std::floor(std::clamp(src[i], 0.0, 1.0) * m_max + 0.5);
    dst[i] = static_cast<std::uint16_t>(std::clamp(code, 0.0, double(m_max)));
  }
  return QuantizedImage(std::move(q), m_max);
}

}  // namespace

LinearImage apply_psf(const LinearImage& img, const Psf& psf) {
  return correlate(img, SparseKernel(psf), +1);
}

QuantizedImage restore(const RestorerId& id, const QuantizedImage& img, const Psf* psf, double gamma) {
  id.validate();
  if (needs_psf(id.kind) && psf == nullptr) {
    throw InvalidArgument(std::string(to_string(id.kind)) + " requires a PSF kernel hint");
  }
  LinearImage lin = linearize(img, gamma);
  if (id.exposure_gain != 1.0) {
    for (double& v : lin.values()) v *= id.exposure_gain;
  }
  switch (id.kind) {
    case RestorerKind::GaussianDenoise:
      return quantize_encoded(gaussian_blur(encode_gamma(lin, gamma), id.params[0]), img.m_max());
    case RestorerKind::BilateralDenoise:
      return quantize_encoded(bilateral(encode_gamma(lin, gamma), id.params[0], id.params[1]), img.m_max());
    case RestorerKind::WienerDeconv:
      return quantize_encoded(encode_gamma(wiener_deconvolve(lin, *psf, id.params[0]), gamma), img.m_max());
    case RestorerKind::RichardsonLucy:
      return quantize_encoded(
          encode_gamma(richardson_lucy(lin, *psf, static_cast<int>(id.params[0]), id.params[1]), gamma),
          img.m_max());
  }
  throw InvalidArgument("unknown restorer");
}

std::vector<RestorerId> default_grid(RestorerKind kind) {
  std::vector<RestorerId> grid;
  switch (kind) {
    case RestorerKind::GaussianDenoise:
      for (double s : {0.0, 0.4, 0.6, 0.8, 1.0, 1.3, 1.7, 2.2, 3.0}) grid.push_back({kind, {s}, 1.0});
      break;
    case RestorerKind::BilateralDenoise:
      grid.push_back({kind, {0.0, 0.1}, 1.0});
      for (double ss : {1.0, 2.0, 3.0}) {
        for (double sr : {0.05, 0.1, 0.2, 0.4}) grid.push_back({kind, {ss, sr}, 1.0});
      }
      break;
    case RestorerKind::WienerDeconv:
      for (double l : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1}) grid.push_back({kind, {l}, 1.0});
      break;
    case RestorerKind::RichardsonLucy:
      for (double pre : {0.0, 0.7, 1.2}) {
        for (double it : {0.0, 5.0, 10.0, 20.0, 40.0}) grid.push_back({kind, {it, pre}, 1.0});
      }
      break;
  }
  return grid;
}

double fit_exposure_gain(std::span<const FitSample> samples, double gamma) {
  double num = 0.0, den = 0.0;
  for (const auto& s : samples) {
    const auto cap = s.capture->data();
    const auto gt = s.ground_truth->data();
    const int m = s.capture->m_max();
    const int gm = s.ground_truth->m_max();
    for (std::size_t i = 0; i < cap.size(); ++i) {
      if (cap[i] >= m) continue;
      num += decode_linear(gt[i], gm, gamma);
      den += decode_linear(cap[i], m, gamma);
    }
  }
  return den > 0.0 && num > 0.0 ? num / den : 1.0;
}

RestorerId fit_restorer_per_exposure(RestorerKind kind, std::span<const FitSample> samples,
                                     std::span<const RestorerId> grid, double gamma, int jobs) {
  if (samples.empty()) throw InvalidArgument("fit_restorer_per_exposure: empty training set");
  if (grid.empty()) throw InvalidArgument("fit_restorer_per_exposure: empty grid");
  for (const auto& s : samples) {
    if (s.capture == nullptr || s.ground_truth == nullptr) {
      throw InvalidArgument("fit_restorer_per_exposure: sample without images");
    }
    if (needs_psf(kind) && !s.psf) throw InvalidArgument("fit_restorer_per_exposure: sample without PSF");
  }
  const double gain = fit_exposure_gain(samples, gamma);
  std::vector<double> score(grid.size(), 0.0);
  parallel_for(grid.size(), jobs, [&](std::size_t g) {
    RestorerId candidate = grid[g];
    candidate.kind = kind;
    candidate.exposure_gain = gain;
    double total = 0.0;
    for (const auto& s : samples) {
      const Psf* psf = s.psf ? &*s.psf : nullptr;
      total += psnr(restore(candidate, *s.capture, psf, gamma), *s.ground_truth);
    }
    score[g] = total / double(samples.size());
  });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (score[g] > score[best]) best = g;
  }
  RestorerId out = grid[best];
  out.kind = kind;
  out.exposure_gain = gain;
  return out;
}

}  // namespace irp
