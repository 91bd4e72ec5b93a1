#pragma once

#include <map>
#include <string>
#include <vector>

#include "mine3d/config.hpp"
#include "mine3d/geom.hpp"

namespace mine3d::metrics {

// One annotation (prediction or ground truth) in the map frame.
struct Box {
  geom::Cuboid cuboid;
  int class_id = 0;
  double confidence = 1.0;
  bool dont_care = false;
};

// All annotations of one frame plus the frame's ego pose (range filtering
// is measured from the ego position).
struct FrameEval {
  geom::Pose ego;
  std::vector<Box> preds;
  std::vector<Box> gts;
};

// Keeps boxes whose BEV distance from the ego is <= the class range
// (inclusive). Throws UnknownClass for class ids outside the table.
std::vector<Box> filter_by_range(const std::vector<Box>& boxes,
                                 const std::vector<ClassParams>& classes,
                                 const geom::Pose& ego);

struct MatchResult {
  std::vector<std::pair<int, int>> matches;  // (pred index, gt index)
  std::vector<int> unmatched_preds;
  std::vector<int> unmatched_gts;
};

// Greedy confidence-descending matching: each prediction takes the nearest
// unmatched ground truth within dist_thresh (BEV centers); distance ties
// pick the lowest ground-truth index. Both sides must share a class.
MatchResult match_predictions(const std::vector<Box>& preds,
                              const std::vector<Box>& gts,
                              double dist_thresh);

// Average precision from a single-class prediction/ground-truth set:
// interpolated precision on the 101-point recall grid, clipped at
// min_recall/min_precision, integrated by trapezoid and normalized so a
// perfect detector scores exactly 1.
double average_precision(const std::vector<Box>& preds,
                         const std::vector<Box>& gts, double dist_thresh,
                         double min_recall = 0.1, double min_precision = 0.1);

struct TpErrors {
  double ate = 0;  // mean BEV center distance, meters
  double ase = 0;  // mean (1 - volume IoU of the aligned size triples)
  double aoe = 0;  // mean |wrapped yaw difference|, radians
};

// True-positive errors over matched pairs. Throws NoTruePositives on an
// empty match set (callers substitute the worst case 1.0/1.0/pi).
TpErrors tp_errors(const std::vector<std::pair<Box, Box>>& matches);

struct ClassMetrics {
  std::string name;
  std::map<double, double> ap;  // threshold -> AP
  double mean_ap = 0;
  double ate = 1.0, ase = 1.0, aoe = 0;
  int tp = 0, fp = 0, fn = 0;
  bool evaluated = false;  // false when absent from both preds and gts
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  double map = 0, mate = 0, mase = 0, maoe = 0;
};

// Full evaluation: per frame range filtering (don't-care predictions are
// excluded), per-class AP over the configured thresholds, and TP errors at
// the fixed tp_error_threshold. Classes absent from both sides are skipped
// from all averages; classes with no TPs report worst-case errors
// (ATE 1.0, ASE 1.0, AOE pi).
EvalReport evaluate(const std::vector<FrameEval>& frames,
                    const std::vector<ClassParams>& classes,
                    const EvalConfig& cfg);

}  // namespace mine3d::metrics
