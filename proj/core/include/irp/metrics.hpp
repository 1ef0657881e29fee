#pragma once

#include <span>
#include <string>
#include <vector>

#include "irp/image.hpp"

namespace irp {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(m_max^2 / MSE); kPsnrCap when the images are identical.
double psnr(const QuantizedImage& a, const QuantizedImage& b);

struct SsimOptions {
  int window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean SSIM over all window positions (stride 1, uniform window, population moments),
// averaged over channels.
double ssim(const QuantizedImage& a, const QuantizedImage& b, const SsimOptions& opts = {});

struct MetricRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  void validate() const;
};

inline MetricRange default_psnr_range() { return {"psnr", 10.0, 50.0}; }
inline MetricRange default_ssim_range() { return {"ssim", 0.0, 1.0}; }

double normalize_metric(double x, const MetricRange& range, bool higher_better = true);

struct Correlation {
  double value = 0.0;
  // Set when either series has zero variance; value is then 0.
  bool degenerate = false;
};

// Average ranks (1-based), ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> x);

Correlation plcc(std::span<const double> x, std::span<const double> y);
Correlation srcc(std::span<const double> x, std::span<const double> y);

}  // namespace irp
