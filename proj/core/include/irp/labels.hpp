#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irp/manifest.hpp"
#include "irp/metrics.hpp"
#include "irp/restoration.hpp"

namespace irp {

struct RestorerScore {
  double psnr = 0.0;
  double ssim = 0.0;
  double irp = 0.0;  // mean of normalised PSNR and SSIM
  bool operator==(const RestorerScore&) const = default;
};

// Restored quality of one capture under each of the four restorers, in kAllRestorers order.
struct IrpRecord {
  std::string scene_id;
  int exposure_index = 0;
  std::array<RestorerScore, 4> per_restorer{};
  double final_irp = 0.0;

  double mean_restored_psnr() const;
  bool operator==(const IrpRecord&) const = default;
};

struct LabelOptions {
  MetricRange psnr_range = default_psnr_range();
  MetricRange ssim_range = default_ssim_range();
  SsimOptions ssim;
  // Label only this split; all scenes when unset.
  std::optional<Split> only_split;
  int jobs = 1;
};

double per_restorer_irp(double psnr_db, double ssim_value, const LabelOptions& opts);

// Mean of the per-restorer IRPs. Throws unless there are exactly four.
double final_irp(std::span<const double> per_restorer);

// Per exposure index, the four fitted restorers in kAllRestorers order.
struct FittedRestorers {
  std::vector<std::array<RestorerId, 4>> by_exposure;
  bool operator==(const FittedRestorers&) const = default;
};

std::string fitted_to_json(const FittedRestorers& f);
FittedRestorers fitted_from_json(std::string_view text);
void save_fitted(const std::filesystem::path& path, const FittedRestorers& f);
FittedRestorers load_fitted(const std::filesystem::path& path);

struct LoadedScene {
  const SceneEntry* entry = nullptr;
  QuantizedImage ground_truth;
  FlowField flow;
  std::vector<QuantizedImage> captures;
};

LoadedScene load_scene(const DatasetManifest& m, const std::filesystem::path& root, const SceneEntry& scene);

// Fits each restorer at each exposure index on the manifest's training scenes.
FittedRestorers fit_restorers(const DatasetManifest& m, const std::filesystem::path& root, int jobs = 1);
FittedRestorers fit_restorers(const std::vector<LoadedScene>& train_scenes, int jobs = 1);

// The four restorers fitted on one set of samples, in kAllRestorers order.
std::array<RestorerId, 4> fit_all_restorers(std::span<const FitSample> samples, double gamma, int jobs = 1);

IrpRecord score_capture(const std::string& scene_id, int exposure_index, const QuantizedImage& capture,
                        const QuantizedImage& ground_truth, const Psf& psf,
                        const std::array<RestorerId, 4>& restorers, double gamma,
                        const LabelOptions& opts);

std::vector<IrpRecord> generate_irp_labels(const DatasetManifest& m, const std::filesystem::path& root,
                                           const FittedRestorers& restorers, const LabelOptions& opts = {});
std::vector<IrpRecord> generate_irp_labels(const std::vector<LoadedScene>& scenes,
                                           const FittedRestorers& restorers, const LabelOptions& opts = {});

std::string labels_to_csv(const std::vector<IrpRecord>& records);
std::vector<IrpRecord> labels_from_csv(std::string_view text);
void save_labels(const std::filesystem::path& path, const std::vector<IrpRecord>& records);
std::vector<IrpRecord> load_labels(const std::filesystem::path& path);

struct ConsistencyMatrix {
  std::array<std::array<double, 4>, 4> srcc{};
  std::array<std::array<bool, 4>, 4> degenerate{};
};

// Pairwise SRCC between per-restorer IRP series. Needs at least 20 records.
ConsistencyMatrix cross_restorer_consistency(const std::vector<IrpRecord>& records);

}  // namespace irp
