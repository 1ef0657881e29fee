#pragma once

#include <string>
#include <vector>

namespace irp {

struct ScoredCapture {
  std::string scene_id;
  int exposure_index = 0;
  double predicted = 0.0;
  double oracle = 0.0;
};

struct SceneCorrelation {
  std::string scene_id;
  int points = 0;
  double srcc = 0.0;
  double plcc = 0.0;
  // Fewer than 3 points or a constant series; excluded from the scene average.
  bool degenerate = false;
};

struct EvalReport {
  // NaN when no scene qualifies.
  double scene_avg_srcc = 0.0;
  double scene_avg_plcc = 0.0;
  double overall_srcc = 0.0;
  double overall_plcc = 0.0;
  bool overall_degenerate = false;
  int scenes_used = 0;
  int degenerate_scenes = 0;
  std::vector<SceneCorrelation> per_scene;  // sorted by scene id
};

// Per-scene SRCC/PLCC across each scene's exposure ladder, averaged over scenes with at
// least 3 points and non-constant series, plus pooled SRCC/PLCC over every capture.
EvalReport evaluate_scores(const std::vector<ScoredCapture>& scores);

// Columns: scope,scene_id,points,srcc,plcc,degenerate. Scope is "scene", then one
// "scene_average" row and one "overall" row.
std::string eval_report_to_csv(const EvalReport& r);

// Columns: scene_id,exposure_index,predicted,oracle.
std::string scores_to_csv(const std::vector<ScoredCapture>& scores);

}  // namespace irp
