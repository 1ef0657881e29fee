#include "irp/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/parallel.hpp"
#include "irp/rng.hpp"
#include "json.hpp"

namespace irp {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw FormatError("unknown split tag '" + std::string(s) + "'");
}

SplitCounts split_counts(int scenes) {
  SplitCounts c;
  c.val = scenes / 10;
  c.test = scenes / 5;
  c.train = scenes - c.val - c.test;
  return c;
}

const SceneEntry* DatasetManifest::find(std::string_view scene_id) const {
  for (const auto& s : scenes) {
    if (s.scene_id == scene_id) return &s;
  }
  return nullptr;
}

std::vector<const SceneEntry*> DatasetManifest::scenes_in(Split split) const {
  std::vector<const SceneEntry*> out;
  for (const auto& s : scenes) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

int DatasetManifest::ladder_size() const {
  return scenes.empty() ? 0 : static_cast<int>(scenes.front().captures.size());
}

DatasetManifest build_manifest(std::vector<SceneEntry> scenes, std::uint64_t split_seed) {
  if (scenes.empty()) throw InvalidArgument("build_manifest: no scenes");
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (!ids.insert(s.scene_id).second) {
      throw InvalidArgument("build_manifest: duplicate scene_id '" + s.scene_id + "'");
    }
  }
  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(split_seed, "manifest.split");
  // Fisher-Yates with an explicit index draw keeps the assignment library-independent.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const SplitCounts counts = split_counts(static_cast<int>(scenes.size()));
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    Split s = Split::Train;
    if (rank < static_cast<std::size_t>(counts.test)) {
      s = Split::Test;
    } else if (rank < static_cast<std::size_t>(counts.test + counts.val)) {
      s = Split::Val;
    }
    scenes[order[rank]].split = s;
  }
  DatasetManifest m;
  m.split_seed = split_seed;
  m.counts = counts;
  m.scenes = std::move(scenes);
  return m;
}

namespace {

json exposure_json(const ExposureConfig& e) {
  return json{{"delta_t", e.delta_t}, {"gain", e.gain},     {"full_well", e.full_well},
              {"read_sigma", e.read_sigma}, {"gamma", e.gamma}, {"m_max", e.m_max}};
}

ExposureConfig exposure_from(const json& j) {
  ExposureConfig e;
  e.delta_t = j.at("delta_t").get<double>();
  e.gain = j.at("gain").get<double>();
  e.full_well = j.at("full_well").get<double>();
  e.read_sigma = j.at("read_sigma").get<double>();
  e.gamma = j.at("gamma").get<double>();
  e.m_max = j.at("m_max").get<int>();
  e.validate();
  return e;
}

json file_json(const FileRef& f) { return json{{"path", f.path}, {"checksum", f.checksum}}; }

FileRef file_from(const json& j) {
  return FileRef{j.at("path").get<std::string>(), j.at("checksum").get<std::string>()};
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& m) {
  json scenes = json::array();
  for (const auto& s : m.scenes) {
    json caps = json::array();
    for (const auto& c : s.captures) {
      caps.push_back(json{{"exposure_index", c.exposure_index},
                          {"exposure", exposure_json(c.exposure)},
                          {"seed", c.seed},
                          {"file", file_json(c.file)}});
    }
    scenes.push_back(json{{"scene_id", s.scene_id},
                          {"split", std::string(to_string(s.split))},
                          {"base_seed", s.base_seed},
                          {"ground_truth", file_json(s.ground_truth)},
                          {"flow", file_json(s.flow)},
                          {"captures", std::move(caps)}});
  }
  json j{{"version", m.version},
         {"dataset_seed", m.dataset_seed},
         {"split_seed", m.split_seed},
         {"width", m.width},
         {"height", m.height},
         {"procedural",
          json{{"max_flow", m.procedural.max_flow},
               {"translation_lo", m.procedural.translation_lo},
               {"translation_hi", m.procedural.translation_hi}}},
         {"counts", json{{"train", m.counts.train}, {"val", m.counts.val}, {"test", m.counts.test}}},
         {"scenes", std::move(scenes)}};
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    DatasetManifest m;
    m.version = j.at("version").get<std::string>();
    if (m.version != DatasetManifest::kVersion) {
      throw FormatError("unsupported manifest version '" + m.version + "'");
    }
    m.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    const auto& p = j.at("procedural");
    m.procedural.max_flow = p.at("max_flow").get<double>();
    m.procedural.translation_lo = p.at("translation_lo").get<double>();
    m.procedural.translation_hi = p.at("translation_hi").get<double>();
    const auto& c = j.at("counts");
    m.counts = {c.at("train").get<int>(), c.at("val").get<int>(), c.at("test").get<int>()};
    for (const auto& sj : j.at("scenes")) {
      SceneEntry s;
      s.scene_id = sj.at("scene_id").get<std::string>();
      s.split = parse_split(sj.at("split").get<std::string>());
      s.base_seed = sj.at("base_seed").get<std::uint64_t>();
      s.ground_truth = file_from(sj.at("ground_truth"));
      s.flow = file_from(sj.at("flow"));
      for (const auto& cj : sj.at("captures")) {
        CaptureEntry ce;
        ce.exposure_index = cj.at("exposure_index").get<int>();
        ce.exposure = exposure_from(cj.at("exposure"));
        ce.seed = cj.at("seed").get<std::uint64_t>();
        ce.file = file_from(cj.at("file"));
        s.captures.push_back(std::move(ce));
      }
      m.scenes.push_back(std::move(s));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  const std::string text = manifest_to_json(m);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return manifest_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void verify_manifest_files(const DatasetManifest& m, const std::filesystem::path& root) {
  auto check = [&](const FileRef& f) {
    const auto p = root / f.path;
    if (!std::filesystem::exists(p)) throw IoError("missing file " + p.string());
    const auto sum = file_checksum(p);
    if (sum != f.checksum) {
      throw FormatError("checksum mismatch for " + p.string() + ": expected " + f.checksum +
                        ", found " + sum);
    }
  };
  for (const auto& s : m.scenes) {
    check(s.ground_truth);
    check(s.flow);
    for (const auto& c : s.captures) check(c.file);
  }
}

std::uint64_t scene_base_seed(std::uint64_t dataset_seed, int scene_index) {
  return derive_seed(dataset_seed, static_cast<std::uint64_t>(scene_index));
}

std::string scene_id_for(int scene_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", scene_index);
  return buf;
}

SceneSpec scene_spec_for(const DatasetManifest& m, const SceneEntry& scene) {
  auto content = generate_procedural_scene(scene.base_seed, m.width, m.height, m.procedural);
  SceneSpec spec;
  spec.scene_id = scene.scene_id;
  spec.ground_truth = std::move(content.frame);
  spec.flow = std::move(content.flow);
  spec.base_seed = scene.base_seed;
  for (const auto& c : scene.captures) spec.exposure_ladder.push_back(c.exposure);
  return spec;
}

DatasetManifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& out_dir,
                                 int jobs) {
  if (opts.scenes < 1) throw InvalidArgument("generate_dataset: need at least one scene");
  const auto ladder = make_exposure_ladder(opts.base_exposure, opts.ladder_size, opts.ladder_min,
                                           opts.ladder_max);
  std::filesystem::create_directories(out_dir);
  std::vector<SceneEntry> entries(static_cast<std::size_t>(opts.scenes));

  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const int index = static_cast<int>(i);
    SceneSpec spec;
    spec.scene_id = scene_id_for(index);
    spec.base_seed = scene_base_seed(opts.seed, index);
    auto content = generate_procedural_scene(spec.base_seed, opts.width, opts.height, opts.procedural);
    spec.ground_truth = std::move(content.frame);
    spec.flow = std::move(content.flow);
    spec.exposure_ladder = ladder;
    const auto captures = generate_scene_captures(spec);

    SceneEntry& e = entries[i];
    e.scene_id = spec.scene_id;
    e.base_seed = spec.base_seed;
    const std::string ext = capture_extension(opts.base_exposure.m_max);

    const std::string gt_rel = spec.scene_id + "/gt" + ext;
    write_capture(out_dir / gt_rel, develop_reference(spec.ground_truth, opts.base_exposure));
    e.ground_truth = {gt_rel, file_checksum(out_dir / gt_rel)};

    const std::string flow_rel = spec.scene_id + "/flow.flo";
    write_flow(out_dir / flow_rel, spec.flow);
    e.flow = {flow_rel, file_checksum(out_dir / flow_rel)};

    for (std::size_t k = 0; k < captures.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "/exp_%02zu", k);
      const std::string rel = spec.scene_id + name + ext;
      write_capture(out_dir / rel, captures[k]);
      e.captures.push_back(CaptureEntry{static_cast<int>(k), ladder[k],
                                        capture_seed(spec.base_seed, static_cast<int>(k)),
                                        FileRef{rel, file_checksum(out_dir / rel)}});
    }
  });

  DatasetManifest m = build_manifest(std::move(entries), opts.split_seed.value_or(opts.seed));
  m.dataset_seed = opts.seed;
  m.width = opts.width;
  m.height = opts.height;
  m.procedural = opts.procedural;
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace irp
