#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irp/image.hpp"
#include "irp/imaging.hpp"

namespace irp {

struct ProceduralOptions {
  // Upper bound on |flow| in pixels per reference interval.
  double max_flow = 8.0;
  // Fraction of max_flow drawn for the global translation, as [lo, hi].
  double translation_lo = 0.2;
  double translation_hi = 0.9;
  bool operator==(const ProceduralOptions&) const = default;
};

struct ProceduralScene {
  RadianceFrame frame;
  FlowField flow;
};

// Textured synthetic frame (oriented gradient, step-edged shapes, smooth blobs and a
// grating patch) with values in [0, 1], plus a smooth flow that is a global translation
// perturbed by low-frequency modes. Deterministic in `seed`. Dimensions must be >= 16.
ProceduralScene generate_procedural_scene(std::uint64_t seed, int width, int height,
                                          const ProceduralOptions& opts = {});

struct SceneSpec {
  std::string scene_id;
  RadianceFrame ground_truth;
  FlowField flow;
  std::vector<ExposureConfig> exposure_ladder;
  std::uint64_t base_seed = 0;

  // Throws InvalidArgument if the ladder is empty or not strictly increasing in delta_t.
  void validate() const;
};

// Seed of the capture at `exposure_index`: base_seed XOR index.
constexpr std::uint64_t capture_seed(std::uint64_t base_seed, int exposure_index) {
  return base_seed ^ static_cast<std::uint64_t>(exposure_index);
}

std::vector<QuantizedImage> generate_scene_captures(const SceneSpec& spec);

}  // namespace irp
