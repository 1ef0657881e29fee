#include "irp/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "irp/metrics.hpp"

namespace irp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EvalReport evaluate_scores(const std::vector<ScoredCapture>& scores) {
  EvalReport r;
  std::map<std::string, std::vector<const ScoredCapture*>> by_scene;
  for (const auto& s : scores) by_scene[s.scene_id].push_back(&s);

  double srcc_sum = 0.0, plcc_sum = 0.0;
  for (const auto& [id, items] : by_scene) {
    std::vector<double> p, o;
    for (const auto* s : items) {
      p.push_back(s->predicted);
      o.push_back(s->oracle);
    }
    SceneCorrelation sc;
    sc.scene_id = id;
    sc.points = static_cast<int>(items.size());
    if (items.size() < 3) {
      sc.degenerate = true;
    } else {
      const auto s = srcc(p, o);
      const auto l = plcc(p, o);
      sc.srcc = s.value;
      sc.plcc = l.value;
      sc.degenerate = s.degenerate || l.degenerate;
    }
    if (sc.degenerate) {
      ++r.degenerate_scenes;
    } else {
      ++r.scenes_used;
      srcc_sum += sc.srcc;
      plcc_sum += sc.plcc;
    }
    r.per_scene.push_back(sc);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.scene_avg_srcc = r.scenes_used ? srcc_sum / r.scenes_used : nan;
  r.scene_avg_plcc = r.scenes_used ? plcc_sum / r.scenes_used : nan;

  std::vector<double> p, o;
  for (const auto& s : scores) {
    p.push_back(s.predicted);
    o.push_back(s.oracle);
  }
  if (scores.size() >= 2) {
    const auto s = srcc(p, o);
    const auto l = plcc(p, o);
    r.overall_srcc = s.value;
    r.overall_plcc = l.value;
    r.overall_degenerate = s.degenerate || l.degenerate;
  } else {
    r.overall_srcc = r.overall_plcc = nan;
    r.overall_degenerate = true;
  }
  return r;
}

std::string eval_report_to_csv(const EvalReport& r) {
  std::string out = "scope,scene_id,points,srcc,plcc,degenerate\n";
  int total = 0;
  for (const auto& s : r.per_scene) {
    out += "scene," + s.scene_id + "," + std::to_string(s.points) + "," + fmt(s.srcc) + "," + fmt(s.plcc) + "," +
           (s.degenerate ? "1" : "0") + "\n";
    total += s.points;
  }
  out += "scene_average,," + std::to_string(r.scenes_used) + "," + fmt(r.scene_avg_srcc) + "," +
         fmt(r.scene_avg_plcc) + "," + std::to_string(r.degenerate_scenes) + "\n";
  out += "overall,," + std::to_string(total) + "," + fmt(r.overall_srcc) + "," + fmt(r.overall_plcc) + "," +
         (r.overall_degenerate ? "1" : "0") + "\n";
  return out;
}

std::string scores_to_csv(const std::vector<ScoredCapture>& scores) {
  std::string out = "scene_id,exposure_index,predicted,oracle\n";
  for (const auto& s : scores) {
    out += s.scene_id + "," + std::to_string(s.exposure_index) + "," + fmt(s.predicted) + "," + fmt(s.oracle) + "\n";
  }
  return out;
}

}  // namespace irp
