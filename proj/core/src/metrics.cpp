#include "irp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "irp/error.hpp"

namespace irp {
namespace {

void require_same(const QuantizedImage& a, const QuantizedImage& b, const char* what) {
  if (!a.pixels().same_shape(b.pixels())) {
    throw DimensionError(std::string(what) + ": image shapes differ (" + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                         " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                         "x" + std::to_string(b.channels()) + ")");
  }
  if (a.m_max() != b.m_max()) throw DimensionError(std::string(what) + ": m_max differs");
}

// Summed-area table with a zero border row/column, per channel.
class Integral {
 public:
  Integral(int w, int h) : w_(w), h_(h), sum_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}

  template <typename F>
  void build(F&& value) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += value(x, y);
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  double box(int x0, int y0, int size) const {
    return at(x0 + size, y0 + size) - at(x0, y0 + size) - at(x0 + size, y0) + at(x0, y0);
  }

 private:
  double& at(int x, int y) { return sum_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  double at(int x, int y) const { return sum_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  int w_, h_;
  std::vector<double> sum_;
};

void require_pair(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) throw DimensionError(std::string(what) + ": length mismatch");
  if (x.size() < 2) throw InvalidArgument(std::string(what) + ": need at least 2 samples");
}

}  // namespace

double psnr(const QuantizedImage& a, const QuantizedImage& b) {
  require_same(a, b, "psnr");
  const auto da = a.data();
  const auto db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = double(da[i]) - double(db[i]);
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrCap;
  const double mse = sse / double(da.size());
  const double peak = a.m_max();
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const QuantizedImage& a, const QuantizedImage& b, const SsimOptions& opts) {
  require_same(a, b, "ssim");
  const int w = a.width(), h = a.height();
  const int win = opts.window;
  if (win < 1 || win > std::min(w, h)) {
    throw InvalidArgument("ssim: window " + std::to_string(win) + " does not fit the image");
  }
  const double L = a.m_max();
  const double c1 = (opts.k1 * L) * (opts.k1 * L);
  const double c2 = (opts.k2 * L) * (opts.k2 * L);
  const double n = double(win) * win;
  const int nx = w - win + 1, ny = h - win + 1;

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    Integral sa(w, h), sb(w, h), saa(w, h), sbb(w, h), sab(w, h);
    sa.build([&](int x, int y) { return double(a.at(x, y, c)); });
    sb.build([&](int x, int y) { return double(b.at(x, y, c)); });
    saa.build([&](int x, int y) { return double(a.at(x, y, c)) * a.at(x, y, c); });
    sbb.build([&](int x, int y) { return double(b.at(x, y, c)) * b.at(x, y, c); });
    sab.build([&](int x, int y) { return double(a.at(x, y, c)) * b.at(x, y, c); });
    double acc = 0.0;
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const double mx = sa.box(x, y, win) / n;
        const double my = sb.box(x, y, win) / n;
        const double vx = std::max(0.0, saa.box(x, y, win) / n - mx * mx);
        const double vy = std::max(0.0, sbb.box(x, y, win) / n - my * my);
        const double cxy = sab.box(x, y, win) / n - mx * my;
        acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
    total += acc / (double(nx) * ny);
  }
  return total / a.channels();
}

void MetricRange::validate() const {
  if (!(hi > lo)) throw InvalidArgument("metric range '" + name + "' needs hi > lo");
}

double normalize_metric(double x, const MetricRange& range, bool higher_better) {
  range.validate();
  const double t = std::clamp((x - range.lo) / (range.hi - range.lo), 0.0, 1.0);
  return higher_better ? t : 1.0 - t;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Correlation plcc(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, "plcc");
  auto constant = [](std::span<const double> s) {
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    return *lo == *hi;
  };
  if (constant(x) || constant(y)) return {0.0, true};
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

Correlation srcc(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, "srcc");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return plcc(rx, ry);
}

}  // namespace irp
