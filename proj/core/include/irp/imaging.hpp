#pragma once

#include <cstdint>
#include <vector>

#include "irp/image.hpp"

namespace irp {

// Parameters of one simulated capture. `gain * delta_t` is the linear signal produced
// by unit radiance; `full_well` is the electron count at linear signal 1.0.
struct ExposureConfig {
  double delta_t = 1.0;
  double gain = 1.0;
  double full_well = 1000.0;
  double read_sigma = 0.01;
  double gamma = 1.0 / 2.2;
  int m_max = 255;

  // Throws InvalidArgument naming the offending field.
  void validate() const;

  bool operator==(const ExposureConfig&) const = default;
};

FlowField scale_flow_for_exposure(const FlowField& flow, const ExposureConfig& cfg);

// max(3, ceil(max |flow|) + 1)
int default_substeps(const FlowField& scaled_flow);

// Discretised exposure integral along an already exposure-scaled flow: the mean of
// `substeps` bilinear, edge-clamped warps at fractions k/(substeps-1) of the flow,
// times delta_t * gain. substeps == 1 is the unwarped frame.
LinearImage integrate_motion(const RadianceFrame& frame, const FlowField& flow,
                             const ExposureConfig& cfg, int substeps);

// Poisson(x * full_well) / full_well per value; negatives are clamped to 0 first.
LinearImage apply_shot_noise(const LinearImage& img, const ExposureConfig& cfg,
                             std::uint64_t rng_seed);

LinearImage apply_read_noise(const LinearImage& img, const ExposureConfig& cfg,
                             std::uint64_t rng_seed);

// floor(clamp(x, 0, 1)^gamma * m_max + 0.5), clamped to [0, m_max].
QuantizedImage develop_to_srgb(const LinearImage& img, const ExposureConfig& cfg);

// Inverse of the development curve without quantisation: (q / m_max)^(1/gamma).
double decode_linear(int code, int m_max, double gamma);
LinearImage linearize(const QuantizedImage& img, double gamma);

// scale_flow -> integrate_motion -> shot noise -> read noise -> develop.
// `substeps` <= 0 selects default_substeps.
QuantizedImage simulate_capture(const RadianceFrame& frame, const FlowField& flow,
                                const ExposureConfig& cfg, std::uint64_t seed, int substeps = 0);

// The reference rendering used as restoration ground truth: static, noiseless,
// unit exposure, developed with cfg's gamma and m_max.
QuantizedImage develop_reference(const RadianceFrame& frame, const ExposureConfig& cfg);

// `count` delta_t values geometrically spaced over [lo, hi]; gain is set so that
// delta_t * gain = 1 at the middle entry. Noise and development settings come from `base`.
std::vector<ExposureConfig> make_exposure_ladder(const ExposureConfig& base, int count = 11,
                                                 double lo = 1.0 / 32.0, double hi = 4.0);

}  // namespace irp
