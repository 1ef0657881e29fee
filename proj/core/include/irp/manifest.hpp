#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irp/imaging.hpp"
#include "irp/scene.hpp"

namespace irp {

enum class Split { Train, Val, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct FileRef {
  std::string path;  // relative to the manifest directory
  std::string checksum;
  bool operator==(const FileRef&) const = default;
};

struct CaptureEntry {
  int exposure_index = 0;
  ExposureConfig exposure;
  std::uint64_t seed = 0;
  FileRef file;
  bool operator==(const CaptureEntry&) const = default;
};

struct SceneEntry {
  std::string scene_id;
  Split split = Split::Train;
  std::uint64_t base_seed = 0;
  FileRef ground_truth;
  FileRef flow;
  std::vector<CaptureEntry> captures;
  bool operator==(const SceneEntry&) const = default;
};

struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
  bool operator==(const SplitCounts&) const = default;
};

// floor(10%) validation, floor(20%) test, remainder train.
SplitCounts split_counts(int scenes);

struct DatasetManifest {
  static constexpr const char* kVersion = "irp-lab/dataset-1";

  std::string version = kVersion;
  std::uint64_t dataset_seed = 0;
  std::uint64_t split_seed = 0;
  int width = 0;
  int height = 0;
  ProceduralOptions procedural;
  SplitCounts counts;
  std::vector<SceneEntry> scenes;

  const SceneEntry* find(std::string_view scene_id) const;
  std::vector<const SceneEntry*> scenes_in(Split s) const;
  int ladder_size() const;

  bool operator==(const DatasetManifest&) const = default;
};

// Assigns train/val/test by a deterministic shuffle of the scenes keyed by split_seed.
// Throws InvalidArgument on duplicate scene ids or an empty scene list.
DatasetManifest build_manifest(std::vector<SceneEntry> scenes, std::uint64_t split_seed);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(std::string_view text);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Every referenced file exists under `root` and matches its checksum; throws IoError or
// FormatError naming the first offender.
void verify_manifest_files(const DatasetManifest& m, const std::filesystem::path& root);

struct DatasetOptions {
  int scenes = 40;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;  // defaults to seed
  ExposureConfig base_exposure;
  int ladder_size = 11;
  double ladder_min = 1.0 / 32.0;
  double ladder_max = 4.0;
  ProceduralOptions procedural;
};

std::uint64_t scene_base_seed(std::uint64_t dataset_seed, int scene_index);
std::string scene_id_for(int scene_index);

// Builds the procedural scene and its ladder for one manifest entry, i.e. the inverse of
// what generate_dataset wrote. Used for regeneration checks.
SceneSpec scene_spec_for(const DatasetManifest& m, const SceneEntry& scene);

// Generates all scenes, writes ground truth / flow / captures and manifest.json under
// `out_dir`, and returns the manifest. Output is identical for any `jobs`.
DatasetManifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& out_dir,
                                 int jobs = 1);

}  // namespace irp
