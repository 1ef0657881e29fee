#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "irp/applications.hpp"
#include "irp/labels.hpp"
#include "irp/manifest.hpp"
#include "irp/predictor.hpp"
#include "irp/training.hpp"

namespace irp {

// Every tunable default of the pipeline. `seed` and `jobs` are threaded into the
// per-stage option structs by the accessors below.
struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  DatasetOptions dataset;   // includes base exposure and procedural options
  LabelOptions labels;
  PredictorConfig predictor;
  TrainOptions training;
  FrameGroupOptions filter;
  SweepOptions sweep;

  // Range checks on every field; throws ConfigError naming the key.
  void validate() const;

  DatasetOptions dataset_options() const;
  LabelOptions label_options() const;
  PredictorConfig predictor_config() const;  // gamma follows the exposure gamma
  TrainOptions train_options() const;
  SweepOptions sweep_options() const;
};

// Overlays a JSON document onto `cfg`. Unknown keys and wrongly typed values throw
// ConfigError with the dotted key path.
void apply_config_json(RunConfig& cfg, std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// The full configuration as JSON, in the layout apply_config_json accepts.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace irp
