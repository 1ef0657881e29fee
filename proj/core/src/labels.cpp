#include "irp/labels.hpp"

#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/imaging.hpp"
#include "irp/parallel.hpp"
#include "json.hpp"

namespace irp {

using nlohmann::json;

double IrpRecord::mean_restored_psnr() const {
  double s = 0.0;
  for (const auto& r : per_restorer) s += r.psnr;
  return s / double(per_restorer.size());
}

double per_restorer_irp(double psnr_db, double ssim_value, const LabelOptions& opts) {
  return 0.5 * (normalize_metric(psnr_db, opts.psnr_range, true) +
                normalize_metric(ssim_value, opts.ssim_range, true));
}

double final_irp(std::span<const double> per_restorer) {
  if (per_restorer.size() != 4) throw InvalidArgument("final IRP averages exactly 4 restorer IRPs");
  return std::accumulate(per_restorer.begin(), per_restorer.end(), 0.0) / 4.0;
}

std::string fitted_to_json(const FittedRestorers& f) {
  json table = json::array();
  for (std::size_t e = 0; e < f.by_exposure.size(); ++e) {
    json row = json::array();
    for (const auto& r : f.by_exposure[e]) {
      row.push_back(json{{"restorer", std::string(to_string(r.kind))},
                         {"params", r.params},
                         {"exposure_gain", r.exposure_gain}});
    }
    table.push_back(json{{"exposure_index", e}, {"restorers", std::move(row)}});
  }
  return json{{"version", "irp-lab/restorers-1"}, {"table", std::move(table)}}.dump(2) + "\n";
}

FittedRestorers fitted_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<std::string>() != "irp-lab/restorers-1") {
      throw FormatError("unsupported restorer table version");
    }
    FittedRestorers f;
    for (const auto& row : j.at("table")) {
      const auto& rs = row.at("restorers");
      if (rs.size() != 4) throw FormatError("restorer table rows need 4 entries");
      std::array<RestorerId, 4> entry;
      for (std::size_t k = 0; k < 4; ++k) {
        entry[k].kind = parse_restorer(rs[k].at("restorer").get<std::string>());
        if (entry[k].kind != kAllRestorers[k]) throw FormatError("restorer table rows are out of order");
        entry[k].params = rs[k].at("params").get<std::vector<double>>();
        entry[k].exposure_gain = rs[k].at("exposure_gain").get<double>();
        entry[k].validate();
      }
      f.by_exposure.push_back(std::move(entry));
    }
    return f;
  } catch (const json::exception& e) {
    throw FormatError(std::string("restorer table: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("restorer table: ") + e.what());
  }
}

void save_fitted(const std::filesystem::path& path, const FittedRestorers& f) {
  const auto text = fitted_to_json(f);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

FittedRestorers load_fitted(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return fitted_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

LoadedScene load_scene(const DatasetManifest& m, const std::filesystem::path& root, const SceneEntry& scene) {
  (void)m;
  LoadedScene s;
  s.entry = &scene;
  if (scene.captures.empty()) throw FormatError("scene " + scene.scene_id + " has no captures");
  const int m_max = scene.captures.front().exposure.m_max;
  s.ground_truth = read_capture(root / scene.ground_truth.path, m_max);
  s.flow = read_flow(root / scene.flow.path);
  for (const auto& c : scene.captures) s.captures.push_back(read_capture(root / c.file.path, c.exposure.m_max));
  return s;
}

FittedRestorers fit_restorers(const std::vector<LoadedScene>& train, int jobs) {
  if (train.empty()) throw InvalidArgument("fit_restorers: empty training set");
  const std::size_t ladder = train.front().captures.size();
  FittedRestorers out;
  out.by_exposure.resize(ladder);
  // One job per (exposure, restorer) cell.
  parallel_for(ladder * 4, jobs, [&](std::size_t job) {
    const std::size_t e = job / 4;
    const RestorerKind kind = kAllRestorers[job % 4];
    std::vector<FitSample> samples;
    double gamma = 1.0 / 2.2;
    for (const auto& s : train) {
      if (s.captures.size() != ladder) throw FormatError("scenes disagree on ladder length");
      const auto& cfg = s.entry->captures[e].exposure;
      gamma = cfg.gamma;
      samples.push_back({&s.captures[e], &s.ground_truth, motion_psf(s.flow, cfg.delta_t)});
    }
    const auto grid = default_grid(kind);
    out.by_exposure[e][job % 4] = fit_restorer_per_exposure(kind, samples, grid, gamma, 1);
  });
  return out;
}

std::array<RestorerId, 4> fit_all_restorers(std::span<const FitSample> samples, double gamma, int jobs) {
  std::array<RestorerId, 4> out;
  parallel_for(4, jobs, [&](std::size_t k) {
    const auto grid = default_grid(kAllRestorers[k]);
    out[k] = fit_restorer_per_exposure(kAllRestorers[k], samples, grid, gamma, 1);
  });
  return out;
}

FittedRestorers fit_restorers(const DatasetManifest& m, const std::filesystem::path& root, int jobs) {
  std::vector<LoadedScene> train;
  for (const auto* s : m.scenes_in(Split::Train)) train.push_back(load_scene(m, root, *s));
  return fit_restorers(train, jobs);
}

IrpRecord score_capture(const std::string& scene_id, int exposure_index, const QuantizedImage& capture,
                        const QuantizedImage& ground_truth, const Psf& psf,
                        const std::array<RestorerId, 4>& restorers, double gamma,
                        const LabelOptions& opts) {
  IrpRecord rec;
  rec.scene_id = scene_id;
  rec.exposure_index = exposure_index;
  std::array<double, 4> irps{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto restored = restore(restorers[k], capture, &psf, gamma);
    auto& r = rec.per_restorer[k];
    r.psnr = psnr(restored, ground_truth);
    r.ssim = ssim(restored, ground_truth, opts.ssim);
    r.irp = per_restorer_irp(r.psnr, r.ssim, opts);
    irps[k] = r.irp;
  }
  rec.final_irp = final_irp(irps);
  return rec;
}

std::vector<IrpRecord> generate_irp_labels(const std::vector<LoadedScene>& scenes,
                                           const FittedRestorers& restorers, const LabelOptions& opts) {
  struct Job {
    const LoadedScene* scene;
    std::size_t exposure;
  };
  std::vector<Job> jobs;
  for (const auto& s : scenes) {
    if (opts.only_split && s.entry->split != *opts.only_split) continue;
    if (s.captures.size() > restorers.by_exposure.size()) {
      throw InvalidArgument("restorer table covers " + std::to_string(restorers.by_exposure.size()) +
                            " exposures but scene " + s.entry->scene_id + " has " +
                            std::to_string(s.captures.size()));
    }
    for (std::size_t e = 0; e < s.captures.size(); ++e) jobs.push_back({&s, e});
  }
  std::vector<IrpRecord> out(jobs.size());
  parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) {
    const auto& [scene, e] = jobs[i];
    const auto& cfg = scene->entry->captures[e].exposure;
    out[i] = score_capture(scene->entry->scene_id, static_cast<int>(e), scene->captures[e],
                           scene->ground_truth, motion_psf(scene->flow, cfg.delta_t),
                           restorers.by_exposure[e], cfg.gamma, opts);
  });
  return out;
}

std::vector<IrpRecord> generate_irp_labels(const DatasetManifest& m, const std::filesystem::path& root,
                                           const FittedRestorers& restorers, const LabelOptions& opts) {
  std::vector<LoadedScene> scenes;
  for (const auto& s : m.scenes) {
    if (opts.only_split && s.split != *opts.only_split) continue;
    scenes.push_back(load_scene(m, root, s));
  }
  return generate_irp_labels(scenes, restorers, opts);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("labels line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string labels_header() {
  std::string h = "scene_id,exposure_index";
  for (auto k : kAllRestorers) {
    const std::string n(to_string(k));
    h += "," + n + "_psnr," + n + "_ssim," + n + "_irp";
  }
  return h + ",final_irp";
}

}  // namespace

std::string labels_to_csv(const std::vector<IrpRecord>& records) {
  std::string out = labels_header() + "\n";
  for (const auto& r : records) {
    out += r.scene_id + "," + std::to_string(r.exposure_index);
    for (const auto& s : r.per_restorer) {
      out += "," + fmt_double(s.psnr) + "," + fmt_double(s.ssim) + "," + fmt_double(s.irp);
    }
    out += "," + fmt_double(r.final_irp) + "\n";
  }
  return out;
}

std::vector<IrpRecord> labels_from_csv(std::string_view text) {
  std::vector<IrpRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != labels_header()) throw FormatError("labels: unexpected header");
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 2 + 3 * 4 + 1) throw FormatError("labels line " + std::to_string(line_no) + ": wrong field count");
    IrpRecord r;
    r.scene_id = std::string(f[0]);
    r.exposure_index = static_cast<int>(parse_double(f[1], line_no));
    for (std::size_t k = 0; k < 4; ++k) {
      r.per_restorer[k].psnr = parse_double(f[2 + 3 * k], line_no);
      r.per_restorer[k].ssim = parse_double(f[3 + 3 * k], line_no);
      r.per_restorer[k].irp = parse_double(f[4 + 3 * k], line_no);
    }
    r.final_irp = parse_double(f[14], line_no);
    out.push_back(std::move(r));
  }
  if (line_no == 0) throw FormatError("labels: empty file");
  return out;
}

void save_labels(const std::filesystem::path& path, const std::vector<IrpRecord>& records) {
  const auto text = labels_to_csv(records);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<IrpRecord> load_labels(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return labels_from_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ConsistencyMatrix cross_restorer_consistency(const std::vector<IrpRecord>& records) {
  if (records.size() < 20) throw InvalidArgument("cross_restorer_consistency: need at least 20 records");
  std::array<std::vector<double>, 4> series;
  for (const auto& r : records) {
    for (std::size_t k = 0; k < 4; ++k) series[k].push_back(r.per_restorer[k].irp);
  }
  ConsistencyMatrix m;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const auto c = srcc(series[i], series[j]);
      m.srcc[i][j] = c.degenerate ? 0.0 : c.value;
      m.degenerate[i][j] = c.degenerate;
    }
  }
  return m;
}

}  // namespace irp
