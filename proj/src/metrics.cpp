#include "mine3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mine3d/errors.hpp"

namespace mine3d::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kWorstAte = 1.0;
constexpr double kWorstAse = 1.0;
constexpr double kWorstAoe = kPi;

double bev_distance(const Box& a, const Box& b) {
  return (a.cuboid.center_bev() - b.cuboid.center_bev()).norm();
}

// (frame, box) pair used for cross-frame accumulation.
struct Tagged {
  int frame = 0;
  const Box* box = nullptr;
};

struct DetOutcome {
  double confidence = 0;
  bool tp = false;
  int pred_frame = -1;
  int pred_index = -1;  // index into the per-class tagged pred list
  int gt_index = -1;    // index into the per-class tagged gt list
};

// Greedy confidence-descending matching across frames; predictions only
// match ground truths of the same frame. Returns one outcome per
// prediction, in match (confidence) order.
std::vector<DetOutcome> greedy_match(const std::vector<Tagged>& preds,
                                     const std::vector<Tagged>& gts,
                                     double dist_thresh) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return preds[a].box->confidence > preds[b].box->confidence;
  });

  std::vector<char> gt_taken(gts.size(), 0);
  std::vector<DetOutcome> out;
  out.reserve(preds.size());
  for (int pi : order) {
    DetOutcome det;
    det.confidence = preds[pi].box->confidence;
    det.pred_frame = preds[pi].frame;
    det.pred_index = pi;
    double best = std::numeric_limits<double>::infinity();
    int best_gt = -1;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi] || gts[gi].frame != preds[pi].frame) continue;
      const double d = bev_distance(*preds[pi].box, *gts[gi].box);
      if (d < best) {  // index order makes ties pick the lowest gt index
        best = d;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best <= dist_thresh) {
      gt_taken[best_gt] = 1;
      det.tp = true;
      det.gt_index = best_gt;
    }
    out.push_back(det);
  }
  return out;
}

// AP from confidence-ordered detection outcomes: interpolated precision on
// the 101-point recall grid, clipped and trapezoid-integrated over
// [min_recall, 1], normalized to make a perfect detector score 1.
double ap_from_outcomes(const std::vector<DetOutcome>& dets, size_t npos,
                        double min_recall, double min_precision) {
  if (npos == 0) return 0.0;

  std::vector<double> recalls, precisions;
  recalls.reserve(dets.size());
  precisions.reserve(dets.size());
  int tp = 0, fp = 0;
  for (const DetOutcome& d : dets) {
    d.tp ? ++tp : ++fp;
    recalls.push_back(static_cast<double>(tp) / static_cast<double>(npos));
    precisions.push_back(static_cast<double>(tp) /
                         static_cast<double>(tp + fp));
  }
  // Suffix max turns the operating points into the interpolated curve
  // p(r) = max precision among points with recall >= r.
  std::vector<double> suffix(precisions);
  for (size_t i = suffix.size(); i-- > 1;)
    suffix[i - 1] = std::max(suffix[i - 1], suffix[i]);

  auto precision_at = [&](double r) {
    const auto it = std::lower_bound(recalls.begin(), recalls.end(), r);
    if (it == recalls.end()) return 0.0;
    return suffix[static_cast<size_t>(it - recalls.begin())];
  };

  const int grid_start =
      static_cast<int>(std::ceil(min_recall * 100.0 - 1e-9));
  const double r0 = grid_start / 100.0;
  double area = 0.0;
  double prev = std::max(0.0, precision_at(r0) - min_precision);
  for (int i = grid_start + 1; i <= 100; ++i) {
    const double cur = std::max(0.0, precision_at(i / 100.0) - min_precision);
    area += 0.5 * (prev + cur) * 0.01;
    prev = cur;
  }
  const double norm = (1.0 - r0) * (1.0 - min_precision);
  return norm > 0.0 ? area / norm : 0.0;
}

}  // namespace

std::vector<Box> filter_by_range(const std::vector<Box>& boxes,
                                 const std::vector<ClassParams>& classes,
                                 const geom::Pose& ego) {
  const geom::Vec2 ego_bev = ego.translation.head<2>();
  std::vector<Box> out;
  out.reserve(boxes.size());
  for (const Box& b : boxes) {
    if (b.class_id < 0 || b.class_id >= static_cast<int>(classes.size()))
      throw UnknownClass("filter_by_range: class id " +
                         std::to_string(b.class_id));
    const double d = (b.cuboid.center_bev() - ego_bev).norm();
    if (d <= classes[b.class_id].eval_range) out.push_back(b);
  }
  return out;
}

MatchResult match_predictions(const std::vector<Box>& preds,
                              const std::vector<Box>& gts,
                              double dist_thresh) {
  std::vector<Tagged> tp, tg;
  for (const Box& p : preds) tp.push_back({0, &p});
  for (const Box& g : gts) tg.push_back({0, &g});
  const std::vector<DetOutcome> dets = greedy_match(tp, tg, dist_thresh);

  MatchResult res;
  std::vector<char> gt_matched(gts.size(), 0);
  for (const DetOutcome& d : dets) {
    if (d.tp) {
      res.matches.emplace_back(d.pred_index, d.gt_index);
      gt_matched[d.gt_index] = 1;
    } else {
      res.unmatched_preds.push_back(d.pred_index);
    }
  }
  for (size_t gi = 0; gi < gts.size(); ++gi)
    if (!gt_matched[gi]) res.unmatched_gts.push_back(static_cast<int>(gi));
  return res;
}

double average_precision(const std::vector<Box>& preds,
                         const std::vector<Box>& gts, double dist_thresh,
                         double min_recall, double min_precision) {
  std::vector<Tagged> tp, tg;
  for (const Box& p : preds) tp.push_back({0, &p});
  for (const Box& g : gts) tg.push_back({0, &g});
  return ap_from_outcomes(greedy_match(tp, tg, dist_thresh), gts.size(),
                          min_recall, min_precision);
}

TpErrors tp_errors(const std::vector<std::pair<Box, Box>>& matches) {
  if (matches.empty()) throw NoTruePositives();
  TpErrors e;
  for (const auto& [pred, gt] : matches) {
    e.ate += bev_distance(pred, gt);
    const double iw = std::min(pred.cuboid.w, gt.cuboid.w);
    const double il = std::min(pred.cuboid.l, gt.cuboid.l);
    const double ih = std::min(pred.cuboid.h, gt.cuboid.h);
    const double inter = iw * il * ih;
    const double vol_p = pred.cuboid.w * pred.cuboid.l * pred.cuboid.h;
    const double vol_g = gt.cuboid.w * gt.cuboid.l * gt.cuboid.h;
    e.ase += 1.0 - inter / (vol_p + vol_g - inter);
    e.aoe += std::abs(geom::wrap_angle(pred.cuboid.theta - gt.cuboid.theta));
  }
  const double n = static_cast<double>(matches.size());
  e.ate /= n;
  e.ase /= n;
  e.aoe /= n;
  return e;
}

EvalReport evaluate(const std::vector<FrameEval>& frames,
                    const std::vector<ClassParams>& classes,
                    const EvalConfig& cfg) {
  // Range filtering per frame; don't-care predictions never participate.
  std::vector<std::vector<Box>> preds_f(frames.size()), gts_f(frames.size());
  for (size_t fi = 0; fi < frames.size(); ++fi) {
    std::vector<Box> live;
    for (const Box& p : frames[fi].preds)
      if (!p.dont_care) live.push_back(p);
    preds_f[fi] = filter_by_range(live, classes, frames[fi].ego);
    gts_f[fi] = filter_by_range(frames[fi].gts, classes, frames[fi].ego);
  }

  EvalReport report;
  std::vector<double> maps, mates, mases, maoes;
  for (size_t ci = 0; ci < classes.size(); ++ci) {
    ClassMetrics cm;
    cm.name = classes[ci].name;

    std::vector<Tagged> preds, gts;
    for (size_t fi = 0; fi < frames.size(); ++fi) {
      for (const Box& p : preds_f[fi])
        if (p.class_id == static_cast<int>(ci))
          preds.push_back({static_cast<int>(fi), &p});
      for (const Box& g : gts_f[fi])
        if (g.class_id == static_cast<int>(ci))
          gts.push_back({static_cast<int>(fi), &g});
    }
    if (preds.empty() && gts.empty()) {
      report.classes.push_back(std::move(cm));
      continue;
    }
    cm.evaluated = true;

    double ap_sum = 0;
    for (double thr : cfg.distance_thresholds) {
      const double ap =
          ap_from_outcomes(greedy_match(preds, gts, thr), gts.size(),
                           cfg.min_recall, cfg.min_precision);
      cm.ap[thr] = ap;
      ap_sum += ap;
    }
    cm.mean_ap = cfg.distance_thresholds.empty()
                     ? 0.0
                     : ap_sum / static_cast<double>(
                                    cfg.distance_thresholds.size());

    const std::vector<DetOutcome> dets =
        greedy_match(preds, gts, cfg.tp_error_threshold);
    std::vector<std::pair<Box, Box>> matched;
    for (const DetOutcome& d : dets) {
      if (d.tp)
        matched.emplace_back(*preds[d.pred_index].box, *gts[d.gt_index].box);
    }
    cm.tp = static_cast<int>(matched.size());
    cm.fp = static_cast<int>(preds.size()) - cm.tp;
    cm.fn = static_cast<int>(gts.size()) - cm.tp;
    if (matched.empty()) {
      cm.ate = kWorstAte;
      cm.ase = kWorstAse;
      cm.aoe = kWorstAoe;
    } else {
      const TpErrors e = tp_errors(matched);
      cm.ate = e.ate;
      cm.ase = e.ase;
      cm.aoe = e.aoe;
    }

    maps.push_back(cm.mean_ap);
    mates.push_back(cm.ate);
    mases.push_back(cm.ase);
    maoes.push_back(cm.aoe);
    report.classes.push_back(std::move(cm));
  }

  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0
                     : std::accumulate(v.begin(), v.end(), 0.0) /
                           static_cast<double>(v.size());
  };
  report.map = mean(maps);
  report.mate = mean(mates);
  report.mase = mean(mases);
  report.maoe = mean(maoes);
  return report;
}

}  // namespace mine3d::metrics
