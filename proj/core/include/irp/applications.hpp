#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irp/evaluation.hpp"
#include "irp/imaging.hpp"
#include "irp/labels.hpp"
#include "irp/manifest.hpp"
#include "irp/predictor.hpp"
#include "irp/scene.hpp"

namespace irp {

// ---- evaluation -------------------------------------------------------------------

struct Prediction {
  std::string scene_id;
  int exposure_index = 0;
  double score = 0.0;
};

// Joins predictions with labels for every capture of `split` and evaluates them. Throws
// InvalidArgument listing capture ids that lack a prediction or a label.
EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<IrpRecord>& labels,
                    const DatasetManifest& m, Split split, std::vector<ScoredCapture>* joined = nullptr);

// Scores every capture of `split` with the model, in manifest order.
std::vector<Prediction> predict_split(const IrpPredictor& model, const DatasetManifest& m,
                                      const std::filesystem::path& root, Split split, int jobs = 1);

// ---- frame filtering --------------------------------------------------------------

struct FrameGroup {
  std::string group_id;
  std::vector<QuantizedImage> frames;
  std::vector<double> oracle_irp;
  std::vector<double> restored_psnr;  // mean over the four fitted restorers
  std::vector<double> predicted;
};

struct FilterResult {
  std::vector<int> selected;
  std::vector<int> oracle_best;
  double accuracy = 0.0;
  double mean_selected_psnr = 0.0;
  double mean_all_psnr = 0.0;
};

// Index of the largest value; ties go to the lowest index. Throws on an empty span.
int select_best(std::span<const double> scores);

// Selects argmax(predicted) per group and compares with argmax(oracle_irp). Throws
// InvalidArgument for an empty group or mismatched per-frame vectors.
FilterResult filter_frames(const std::vector<FrameGroup>& groups);

struct FrameGroupOptions {
  int groups = 20;
  int frames = 10;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  ExposureConfig exposure;  // fixed exposure shared by every frame
  int exposure_index = 5;   // which fitted restorer row scores the frames
  // Per-frame multiplier of the scene flow, uniform in [lo, hi].
  double flow_scale_lo = 0.0;
  double flow_scale_hi = 2.0;
  ProceduralOptions procedural;
};

// Synthetic groups: one procedural scene per group, each frame with its own random
// flow scale and noise seed, scored by the fitted restorers. `predicted` is left empty.
std::vector<FrameGroup> make_frame_groups(const FrameGroupOptions& opts, const FittedRestorers& restorers,
                                          const LabelOptions& label_opts = {});

void score_frame_groups(std::vector<FrameGroup>& groups, const IrpPredictor& model, int jobs = 1);

// Columns: group_id,selected,oracle_best,selected_psnr,mean_psnr; a final "summary" row
// carries accuracy in the selected column.
std::string filter_result_to_csv(const std::vector<FrameGroup>& groups, const FilterResult& r);

// ---- exposure recommendation ------------------------------------------------------

struct Recommendation {
  int index = 0;
  std::vector<double> scores;
  std::vector<QuantizedImage> captures;
};

// Simulates every ladder entry (capture seed = capture_seed(seed, k)), scores it, and
// returns the argmax; ties prefer the shorter exposure.
Recommendation recommend_exposure(const RadianceFrame& frame, const FlowField& flow,
                                  const std::vector<ExposureConfig>& ladder, const IrpPredictor& model,
                                  std::uint64_t seed);

// Auto-exposure stand-in: the brightest capture (highest mean code) with at most
// `max_clipped` of its values at m_max; the least clipped capture if none qualifies.
int brightest_exposure(std::span<const QuantizedImage> captures, double max_clipped = 0.01);

// ---- degradation sweep ------------------------------------------------------------

enum class SweepAxis { Illumination, Blur, Noise };
std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepOptions {
  SweepAxis axis = SweepAxis::Blur;
  // Severities, strictly increasing; 0 is the undegraded setting of the axis.
  //   illumination: delta_t * gain = 2^-severity
  //   blur:         flow multiplied by severity
  //   noise:        read_sigma + 0.02 severity, full_well / (1 + severity)
  std::vector<double> levels{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
  int seeds = 8;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  ExposureConfig base;
  // Flow multiplier applied on the illumination and noise axes.
  double fixed_blur = 0.25;
  ProceduralOptions procedural;
  int jobs = 1;
};

struct SweepRow {
  int level = 0;
  double severity = 0.0;
  double mean_irp = 0.0;
  double mean_psnr = 0.0;
  std::vector<double> irp_per_seed;
};

ExposureConfig sweep_exposure(const SweepOptions& opts, double severity);

// Per level, restorers are fitted on that level's captures across seeds (the best
// achievable classical restoration at that severity) and the captures are scored.
std::vector<SweepRow> degradation_sweep(const SweepOptions& opts, const LabelOptions& label_opts = {});

// Columns: axis,level,severity,mean_irp,mean_psnr.
std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace irp
