#include "irp/applications.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/metrics.hpp"
#include "irp/parallel.hpp"
#include "irp/restoration.hpp"
#include "irp/rng.hpp"

namespace irp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string missing_message(const std::string& what, const std::vector<std::string>& ids) {
  std::string msg = what + " missing for " + std::to_string(ids.size()) + " capture(s):";
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += " " + ids[i];
  if (ids.size() > 20) msg += " ...";
  return msg;
}

FlowField scale_flow(const FlowField& flow, double s) {
  FlowField out(flow.width(), flow.height());
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x)
      out.set(x, y, static_cast<float>(flow.u(x, y) * s), static_cast<float>(flow.v(x, y) * s));
  return out;
}

}  // namespace

// ---- evaluation -------------------------------------------------------------------

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<IrpRecord>& labels,
                    const DatasetManifest& m, Split split, std::vector<ScoredCapture>* joined) {
  std::map<std::pair<std::string, int>, double> pred, lab;
  for (const auto& p : predictions) pred[{p.scene_id, p.exposure_index}] = p.score;
  for (const auto& l : labels) lab[{l.scene_id, l.exposure_index}] = l.final_irp;
  std::vector<ScoredCapture> scored;
  std::vector<std::string> no_pred, no_label;
  for (const auto* scene : m.scenes_in(split)) {
    for (const auto& cap : scene->captures) {
      const std::pair<std::string, int> key{scene->scene_id, cap.exposure_index};
      const std::string id = scene->scene_id + "/" + std::to_string(cap.exposure_index);
      const auto p = pred.find(key);
      const auto l = lab.find(key);
      if (p == pred.end()) no_pred.push_back(id);
      if (l == lab.end()) no_label.push_back(id);
      if (p != pred.end() && l != lab.end()) scored.push_back({scene->scene_id, cap.exposure_index, p->second, l->second});
    }
  }
  if (!no_pred.empty()) throw InvalidArgument(missing_message("predictions", no_pred));
  if (!no_label.empty()) throw InvalidArgument(missing_message("labels", no_label));
  if (scored.empty()) throw InvalidArgument("split '" + std::string(to_string(split)) + "' has no captures");
  auto report = evaluate_scores(scored);
  if (joined) *joined = std::move(scored);
  return report;
}

std::vector<Prediction> predict_split(const IrpPredictor& model, const DatasetManifest& m,
                                      const std::filesystem::path& root, Split split, int jobs) {
  struct Item {
    const SceneEntry* scene;
    const CaptureEntry* capture;
  };
  std::vector<Item> items;
  for (const auto* scene : m.scenes_in(split))
    for (const auto& cap : scene->captures) items.push_back({scene, &cap});
  std::vector<Prediction> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto img = read_capture(root / items[i].capture->file.path, items[i].capture->exposure.m_max);
    out[i] = {items[i].scene->scene_id, items[i].capture->exposure_index, model.predict(img)};
  });
  return out;
}

// ---- frame filtering --------------------------------------------------------------

int select_best(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("select_best: no scores");
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

FilterResult filter_frames(const std::vector<FrameGroup>& groups) {
  if (groups.empty()) throw InvalidArgument("filter_frames: no groups");
  FilterResult r;
  double sel_psnr = 0.0, all_psnr = 0.0;
  int hits = 0;
  for (const auto& g : groups) {
    const std::size_t n = g.predicted.size();
    if (n == 0) throw InvalidArgument("filter_frames: group '" + g.group_id + "' is empty or unscored");
    if (g.oracle_irp.size() != n || g.restored_psnr.size() != n) {
      throw InvalidArgument("filter_frames: group '" + g.group_id + "' has mismatched per-frame vectors");
    }
    const int sel = select_best(g.predicted);
    const int best = select_best(g.oracle_irp);
    r.selected.push_back(sel);
    r.oracle_best.push_back(best);
    hits += sel == best;
    sel_psnr += g.restored_psnr[static_cast<std::size_t>(sel)];
    double s = 0.0;
    for (double v : g.restored_psnr) s += v;
    all_psnr += s / static_cast<double>(n);
  }
  const double ng = static_cast<double>(groups.size());
  r.accuracy = hits / ng;
  r.mean_selected_psnr = sel_psnr / ng;
  r.mean_all_psnr = all_psnr / ng;
  return r;
}

std::vector<FrameGroup> make_frame_groups(const FrameGroupOptions& opts, const FittedRestorers& restorers,
                                          const LabelOptions& label_opts) {
  if (opts.groups < 1) throw InvalidArgument("frame groups: groups must be >= 1");
  if (opts.frames < 2) throw InvalidArgument("frame groups: frames must be >= 2");
  if (!(opts.flow_scale_lo >= 0.0 && opts.flow_scale_hi >= opts.flow_scale_lo)) {
    throw InvalidArgument("frame groups: flow scale range must satisfy 0 <= lo <= hi");
  }
  if (opts.exposure_index < 0 || static_cast<std::size_t>(opts.exposure_index) >= restorers.by_exposure.size()) {
    throw InvalidArgument("frame groups: exposure_index " + std::to_string(opts.exposure_index) +
                          " outside the fitted restorer table");
  }
  opts.exposure.validate();
  const auto& fitted = restorers.by_exposure[static_cast<std::size_t>(opts.exposure_index)];
  std::vector<FrameGroup> groups(static_cast<std::size_t>(opts.groups));
  parallel_for(groups.size(), label_opts.jobs, [&](std::size_t gi) {
    const std::uint64_t gseed = derive_seed(opts.seed, gi);
    const auto scene = generate_procedural_scene(derive_seed(gseed, seed_tag("scene")), opts.width, opts.height,
                                                 opts.procedural);
    const auto gt = develop_reference(scene.frame, opts.exposure);
    auto rng = make_rng(gseed, "frame.scale");
    char id[32];
    std::snprintf(id, sizeof id, "group_%04zu", gi);
    FrameGroup& g = groups[gi];
    g.group_id = id;
    for (int f = 0; f < opts.frames; ++f) {
      const double s = uniform(rng, opts.flow_scale_lo, opts.flow_scale_hi);
      const auto flow = scale_flow(scene.flow, s);
      const auto capture = simulate_capture(scene.frame, flow, opts.exposure, capture_seed(gseed, f));
      const auto rec = score_capture(g.group_id, f, capture, gt, motion_psf(flow, opts.exposure.delta_t), fitted,
                                     opts.exposure.gamma, label_opts);
      g.frames.push_back(capture);
      g.oracle_irp.push_back(rec.final_irp);
      g.restored_psnr.push_back(rec.mean_restored_psnr());
    }
  });
  return groups;
}

void score_frame_groups(std::vector<FrameGroup>& groups, const IrpPredictor& model, int jobs) {
  parallel_for(groups.size(), jobs, [&](std::size_t gi) {
    auto& g = groups[gi];
    g.predicted.assign(g.frames.size(), 0.0);
    for (std::size_t f = 0; f < g.frames.size(); ++f) g.predicted[f] = model.predict(g.frames[f]);
  });
}

std::string filter_result_to_csv(const std::vector<FrameGroup>& groups, const FilterResult& r) {
  std::string out = "group_id,selected,oracle_best,selected_psnr,mean_psnr\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    double mean = 0.0;
    for (double v : g.restored_psnr) mean += v;
    mean /= static_cast<double>(g.restored_psnr.size());
    out += g.group_id + "," + std::to_string(r.selected[i]) + "," + std::to_string(r.oracle_best[i]) + "," +
           fmt(g.restored_psnr[static_cast<std::size_t>(r.selected[i])]) + "," + fmt(mean) + "\n";
  }
  out += "summary," + fmt(r.accuracy) + ",," + fmt(r.mean_selected_psnr) + "," + fmt(r.mean_all_psnr) + "\n";
  return out;
}

// ---- exposure recommendation ------------------------------------------------------

Recommendation recommend_exposure(const RadianceFrame& frame, const FlowField& flow,
                                  const std::vector<ExposureConfig>& ladder, const IrpPredictor& model,
                                  std::uint64_t seed) {
  if (ladder.empty()) throw InvalidArgument("recommend_exposure: empty ladder");
  Recommendation r;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    r.captures.push_back(simulate_capture(frame, flow, ladder[k], capture_seed(seed, static_cast<int>(k))));
    r.scores.push_back(model.predict(r.captures.back()));
  }
  // Highest score; among equal scores the shortest exposure.
  r.index = 0;
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    const auto b = static_cast<std::size_t>(r.index);
    if (r.scores[k] > r.scores[b] || (r.scores[k] == r.scores[b] && ladder[k].delta_t < ladder[b].delta_t)) {
      r.index = static_cast<int>(k);
    }
  }
  return r;
}

int brightest_exposure(std::span<const QuantizedImage> captures, double max_clipped) {
  if (captures.empty()) throw InvalidArgument("brightest_exposure: no captures");
  int best = -1, least_clipped = 0;
  double best_mean = -1.0, least_frac = 2.0;
  for (std::size_t k = 0; k < captures.size(); ++k) {
    const auto d = captures[k].data();
    std::size_t clipped = 0;
    for (auto v : d) clipped += v >= captures[k].m_max();
    const double frac = static_cast<double>(clipped) / static_cast<double>(d.size());
    const double mean = captures[k].mean();
    if (frac < least_frac) {
      least_frac = frac;
      least_clipped = static_cast<int>(k);
    }
    if (frac <= max_clipped && mean > best_mean) {
      best_mean = mean;
      best = static_cast<int>(k);
    }
  }
  return best >= 0 ? best : least_clipped;
}

// ---- degradation sweep ------------------------------------------------------------

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Illumination: return "illumination";
    case SweepAxis::Blur: return "blur";
    case SweepAxis::Noise: return "noise";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "illumination") return SweepAxis::Illumination;
  if (s == "blur") return SweepAxis::Blur;
  if (s == "noise") return SweepAxis::Noise;
  throw InvalidArgument("unknown sweep axis '" + std::string(s) + "' (expected illumination, blur or noise)");
}

ExposureConfig sweep_exposure(const SweepOptions& opts, double severity) {
  ExposureConfig cfg = opts.base;
  if (opts.axis == SweepAxis::Illumination) {
    cfg.gain = opts.base.gain * std::pow(2.0, -severity);
  } else if (opts.axis == SweepAxis::Noise) {
    cfg.read_sigma = opts.base.read_sigma + 0.02 * severity;
    cfg.full_well = opts.base.full_well / (1.0 + severity);
  }
  return cfg;
}

std::vector<SweepRow> degradation_sweep(const SweepOptions& opts, const LabelOptions& label_opts) {
  if (opts.levels.empty()) throw InvalidArgument("degradation sweep: no levels");
  for (std::size_t i = 0; i < opts.levels.size(); ++i) {
    if (opts.levels[i] < 0.0 || (i > 0 && !(opts.levels[i] > opts.levels[i - 1]))) {
      throw InvalidArgument("degradation sweep: levels must be non-negative and strictly increasing");
    }
  }
  if (opts.seeds < 1) throw InvalidArgument("degradation sweep: seeds must be >= 1");
  opts.base.validate();

  std::vector<ProceduralScene> scenes;
  std::vector<QuantizedImage> gts;
  for (int s = 0; s < opts.seeds; ++s) {
    scenes.push_back(generate_procedural_scene(derive_seed(opts.seed, static_cast<std::uint64_t>(s)), opts.width,
                                               opts.height, opts.procedural));
    gts.push_back(develop_reference(scenes.back().frame, opts.base));
  }

  std::vector<SweepRow> rows(opts.levels.size());
  parallel_for(opts.levels.size(), opts.jobs, [&](std::size_t li) {
    const double sev = opts.levels[li];
    const auto cfg = sweep_exposure(opts, sev);
    const double blur = opts.axis == SweepAxis::Blur ? sev : opts.fixed_blur;
    std::vector<QuantizedImage> captures;
    std::vector<Psf> psfs;
    for (int s = 0; s < opts.seeds; ++s) {
      const auto flow = scale_flow(scenes[static_cast<std::size_t>(s)].flow, blur);
      // Same noise seed at every level so that levels differ only in the swept knob.
      const auto seed = derive_seed(opts.seed, seed_tag("sweep.capture") + static_cast<std::uint64_t>(s));
      captures.push_back(simulate_capture(scenes[static_cast<std::size_t>(s)].frame, flow, cfg, seed));
      psfs.push_back(motion_psf(flow, cfg.delta_t));
    }
    std::vector<FitSample> samples;
    for (int s = 0; s < opts.seeds; ++s) {
      const auto i = static_cast<std::size_t>(s);
      samples.push_back({&captures[i], &gts[i], psfs[i]});
    }
    const auto fitted = fit_all_restorers(samples, cfg.gamma);
    SweepRow row;
    row.level = static_cast<int>(li);
    row.severity = sev;
    for (int s = 0; s < opts.seeds; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const auto rec = score_capture("sweep", row.level, captures[i], gts[i], psfs[i], fitted, cfg.gamma, label_opts);
      row.irp_per_seed.push_back(rec.final_irp);
      row.mean_irp += rec.final_irp / opts.seeds;
      row.mean_psnr += rec.mean_restored_psnr() / opts.seeds;
    }
    rows[li] = std::move(row);
  });
  return rows;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::string out = "axis,level,severity,mean_irp,mean_psnr\n";
  for (const auto& r : rows) {
    out += std::string(to_string(axis)) + "," + std::to_string(r.level) + "," + fmt(r.severity) + "," +
           fmt(r.mean_irp) + "," + fmt(r.mean_psnr) + "\n";
  }
  return out;
}

}  // namespace irp
