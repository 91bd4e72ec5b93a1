#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mine3d/config.hpp"
#include "mine3d/frustum.hpp"
#include "mine3d/geom.hpp"
#include "mine3d/hdmap.hpp"

namespace mine3d::inflate {

// One mined label: map-frame cuboid, target class index, 2D confidence,
// and the don't-care flag set by the confidence policy.
struct MinedCuboid {
  geom::Cuboid cuboid;
  int class_id = 0;
  double confidence = 0;
  bool dont_care = false;
};

// One calibrated sweep as consumed by mine_frame.
struct Frame {
  std::string frame_id;
  geom::PointCloud cloud_ego;  // ego frame; ego_pose maps it into the map
  std::vector<frustum::InstanceMask> masks;
  std::map<int, geom::CameraModel> cameras;
  geom::Pose ego_pose;  // map-from-ego
};

// Geometric median of the proposal's points (tol 1e-6 m, 200 iterations).
geom::Vec3 seed_point(const geom::PointCloud& proposal_points);

// atan2 of the nearest lane tangent at the seed's BEV projection; empty
// when the nearest lane is farther than max_lane_dist.
std::optional<double> orient_by_map(const geom::Vec3& seed,
                                    const hdmap::LaneIndex& lanes,
                                    double max_lane_dist);

// Direction of the longer axis of the minimum-area rectangle, in
// (-pi/2, pi/2]. The heading sign is deliberately ambiguous.
double orient_by_calipers(const std::vector<geom::Vec2>& bev_points);

// Class-conditioned box carve around the seed: keeps points whose
// seed-centered, theta-aligned BEV coordinates satisfy |axis1| <= clip[0]
// and |axis2| <= clip[1], with z - ground_z <= clip[2] and
// z >= ground_z - 0.2.
geom::PointCloud clip_instance(const geom::PointCloud& cloud,
                               const geom::Vec3& seed, double theta,
                               const ClassParams& params, double ground_z);

// Tight box around S in the theta-aligned frame (l along heading), with the
// bottom snapped to the ground: h spans from ground_z to the highest point.
geom::Cuboid initial_cuboid(const geom::PointCloud& s, double theta,
                            double ground_z);

// Per principal axis, anchors the interval endpoint nearest the ego (the
// ground endpoint vertically) and extends the far endpoint so the extent
// becomes max(observed, prior). Never shrinks, never moves the anchored
// side.
geom::Cuboid amodal_complete(const geom::Cuboid& c, const geom::Vec2& ego_bev,
                             const ClassParams& params, double ground_z);

// Mined confidence is the 2D detector confidence, unchanged.
double score(double mask_confidence);

// Greedy BEV NMS: confidence-descending (stable), same-class suppression at
// IoU >= iou_thresh; cross-class pairs never suppress.
std::vector<MinedCuboid> nms_bev(std::vector<MinedCuboid> cands,
                                 double iou_thresh);

// Sets dont_care = confidence < class threshold (strict); removes nothing.
// Throws UnknownClass for out-of-table class ids.
std::vector<MinedCuboid> apply_confidence_policy(
    std::vector<MinedCuboid> cands, const std::vector<ClassParams>& classes);

// Full per-frame pipeline: ground removal, ROI filter, frustum extraction,
// then per proposal seed/orient/clip/fit/amodalize/score, finished by NMS
// and the confidence policy. Deterministic for fixed inputs and config.
std::vector<MinedCuboid> mine_frame(const Frame& frame, const hdmap::HdMap& map,
                                    const RunConfig& cfg);

}  // namespace mine3d::inflate
