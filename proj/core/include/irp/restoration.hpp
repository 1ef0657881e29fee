#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irp/image.hpp"

namespace irp {

enum class RestorerKind { GaussianDenoise, BilateralDenoise, WienerDeconv, RichardsonLucy };

inline constexpr std::array<RestorerKind, 4> kAllRestorers = {
    RestorerKind::GaussianDenoise, RestorerKind::BilateralDenoise, RestorerKind::WienerDeconv,
    RestorerKind::RichardsonLucy};

std::string_view to_string(RestorerKind k);
RestorerKind parse_restorer(std::string_view name);
bool needs_psf(RestorerKind k);

// A restorer and its hyperparameters.
//
//   gaussian-denoise   {sigma}                 sigma in [0, 5], 0 is identity
//   bilateral-denoise  {sigma_s, sigma_r}      sigma_s in [0, 5] (0 is identity), sigma_r in (0, 1]
//   wiener-deconv      {lambda}                Laplacian-regularised inverse, lambda in (0, 10]
//   richardson-lucy    {iterations, pre_sigma} iterations in [0, 200], pre_sigma in [0, 5]
//
// Every restorer first multiplies the linearised capture by `exposure_gain`, the
// per-exposure brightness correction learned during fitting. Denoisers then work on the
// gamma-encoded signal; deconvolvers work in linear light.
struct RestorerId {
  RestorerKind kind = RestorerKind::GaussianDenoise;
  std::vector<double> params;
  double exposure_gain = 1.0;

  void validate() const;
  std::string describe() const;
  bool operator==(const RestorerId&) const = default;
};

// Motion point-spread function in the sampling convention of integrate_motion:
// blurred(p) = sum_k weight_k * sharp(p + offset_k).
struct PsfTap {
  double dx = 0.0;
  double dy = 0.0;
  double weight = 0.0;
};

class Psf {
 public:
  Psf() : taps_{{0.0, 0.0, 1.0}} {}
  explicit Psf(std::vector<PsfTap> taps);

  // `length + 1` evenly spaced taps from the origin along (dir_x, dir_y) over `length` px.
  static Psf line(double length, double dir_x, double dir_y);

  std::span<const PsfTap> taps() const { return taps_; }

  // Rasterised (bilinearly splatted) kernel: blurred(x, y) =
  // sum_{i,j} weights[j * width + i] * sharp(x + x0 + i, y + y0 + j).
  struct Grid {
    int x0 = 0, y0 = 0, width = 1, height = 1;
    std::vector<double> weights{1.0};
  };
  Grid rasterize() const;

 private:
  std::vector<PsfTap> taps_;
};

// Box PSF of round(mean|flow| * delta_t) + 1 taps along the mean-flow direction.
Psf motion_psf(const FlowField& flow, double delta_t);

// Edge-clamped application of a PSF to a linear image.
LinearImage apply_psf(const LinearImage& img, const Psf& psf);

// Throws InvalidArgument when a deconvolution restorer is called without a PSF.
QuantizedImage restore(const RestorerId& id, const QuantizedImage& img, const Psf* psf, double gamma);

// The shipped hyperparameter grid for each restorer (exposure_gain left at 1).
std::vector<RestorerId> default_grid(RestorerKind kind);

struct FitSample {
  const QuantizedImage* capture = nullptr;
  const QuantizedImage* ground_truth = nullptr;
  std::optional<Psf> psf;
};

// Ratio of summed linear ground truth to summed linear capture over unsaturated pixels.
double fit_exposure_gain(std::span<const FitSample> samples, double gamma);

// Fits the exposure gain, then grid-searches hyperparameters for the highest mean restored
// PSNR against ground truth. Ties keep the earliest grid entry.
RestorerId fit_restorer_per_exposure(RestorerKind kind, std::span<const FitSample> samples,
                                     std::span<const RestorerId> grid, double gamma, int jobs = 1);

}  // namespace irp
