#include "mine3d/inflate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mine3d/errors.hpp"

namespace mine3d::inflate {

namespace {

// Floor for degenerate box extents (single-point or planar clips).
constexpr double kMinExtent = 0.01;

// Points this far below the local ground still count as the object's.
constexpr double kUnderGroundTol = 0.2;

struct AxisFrame {
  geom::Vec2 axis1, axis2;
};

AxisFrame heading_frame(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {{c, s}, {-s, c}};
}

// Expands [lo, hi] away from the origin-side endpoint to span `target`.
void expand_interval(double& lo, double& hi, double target) {
  if (std::abs(lo) <= std::abs(hi)) {
    hi = lo + target;
  } else {
    lo = hi - target;
  }
}

}  // namespace

geom::Vec3 seed_point(const geom::PointCloud& proposal_points) {
  return geom::geometric_median(proposal_points, 1e-6, 200);
}

std::optional<double> orient_by_map(const geom::Vec3& seed,
                                    const hdmap::LaneIndex& lanes,
                                    double max_lane_dist) {
  const hdmap::LaneTangent t = lanes.nearest_tangent(seed.head<2>());
  if (t.distance > max_lane_dist) return std::nullopt;
  return std::atan2(t.direction.y(), t.direction.x());
}

double orient_by_calipers(const std::vector<geom::Vec2>& bev_points) {
  return geom::min_area_rect(bev_points).angle;
}

geom::PointCloud clip_instance(const geom::PointCloud& cloud,
                               const geom::Vec3& seed, double theta,
                               const ClassParams& params, double ground_z) {
  const AxisFrame f = heading_frame(theta);
  const geom::Vec2 seed_bev = seed.head<2>();
  geom::PointCloud out;
  for (const geom::Vec3& p : cloud) {
    const geom::Vec2 rel = geom::Vec2(p.head<2>()) - seed_bev;
    if (std::abs(rel.dot(f.axis1)) > params.clip[0]) continue;
    if (std::abs(rel.dot(f.axis2)) > params.clip[1]) continue;
    if (p.z() - ground_z > params.clip[2]) continue;
    if (p.z() < ground_z - kUnderGroundTol) continue;
    out.push_back(p);
  }
  return out;
}

geom::Cuboid initial_cuboid(const geom::PointCloud& s, double theta,
                            double ground_z) {
  if (s.empty()) throw EmptyInput("initial_cuboid: empty instance points");
  const AxisFrame f = heading_frame(theta);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  double top = -umin;
  for (const geom::Vec3& p : s) {
    const geom::Vec2 bev = p.head<2>();
    const double u = bev.dot(f.axis1), v = bev.dot(f.axis2);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    top = std::max(top, p.z());
  }
  geom::Cuboid c;
  c.l = std::max(umax - umin, kMinExtent);
  c.w = std::max(vmax - vmin, kMinExtent);
  c.h = std::max(top - ground_z, kMinExtent);
  const geom::Vec2 center =
      f.axis1 * (0.5 * (umin + umax)) + f.axis2 * (0.5 * (vmin + vmax));
  c.x = center.x();
  c.y = center.y();
  c.z = ground_z + 0.5 * c.h;
  c.theta = geom::wrap_angle(theta);
  return c;
}

geom::Cuboid amodal_complete(const geom::Cuboid& c, const geom::Vec2& ego_bev,
                             const ClassParams& params, double ground_z) {
  const AxisFrame f = heading_frame(c.theta);
  const geom::Vec2 rel = c.center_bev() - ego_bev;

  double lo1 = rel.dot(f.axis1) - 0.5 * c.l;
  double hi1 = rel.dot(f.axis1) + 0.5 * c.l;
  double lo2 = rel.dot(f.axis2) - 0.5 * c.w;
  double hi2 = rel.dot(f.axis2) + 0.5 * c.w;
  expand_interval(lo1, hi1, std::max(hi1 - lo1, params.prior[0]));
  expand_interval(lo2, hi2, std::max(hi2 - lo2, params.prior[1]));

  geom::Cuboid out = c;
  out.l = hi1 - lo1;
  out.w = hi2 - lo2;
  const geom::Vec2 center = ego_bev + f.axis1 * (0.5 * (lo1 + hi1)) +
                            f.axis2 * (0.5 * (lo2 + hi2));
  out.x = center.x();
  out.y = center.y();

  // Vertical axis: the bottom (ground-side) endpoint stays put.
  const double bottom = c.z - 0.5 * c.h;
  (void)ground_z;  // the bottom already sits at the ground in the pipeline
  out.h = std::max(c.h, params.prior[2]);
  out.z = bottom + 0.5 * out.h;
  return out;
}

double score(double mask_confidence) { return mask_confidence; }

std::vector<MinedCuboid> nms_bev(std::vector<MinedCuboid> cands,
                                 double iou_thresh) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const MinedCuboid& a, const MinedCuboid& b) {
                     return a.confidence > b.confidence;
                   });
  std::vector<MinedCuboid> kept;
  for (const MinedCuboid& cand : cands) {
    bool suppressed = false;
    for (const MinedCuboid& k : kept) {
      if (k.class_id != cand.class_id) continue;
      if (geom::bev_iou(k.cuboid, cand.cuboid) >= iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<MinedCuboid> apply_confidence_policy(
    std::vector<MinedCuboid> cands, const std::vector<ClassParams>& classes) {
  for (MinedCuboid& c : cands) {
    if (c.class_id < 0 || c.class_id >= static_cast<int>(classes.size()))
      throw UnknownClass("apply_confidence_policy: class id " +
                         std::to_string(c.class_id));
    c.dont_care = c.confidence < classes[c.class_id].conf_threshold;
  }
  return cands;
}

std::vector<MinedCuboid> mine_frame(const Frame& frame,
                                    const hdmap::HdMap& map,
                                    const RunConfig& cfg) {
  geom::PointCloud map_cloud;
  map_cloud.reserve(frame.cloud_ego.size());
  for (const geom::Vec3& p : frame.cloud_ego)
    map_cloud.push_back(frame.ego_pose.apply(p));

  const geom::PointCloud above_ground =
      frustum::remove_ground(map_cloud, map.ground(), cfg.ground_eps);
  const geom::PointCloud filtered =
      frustum::filter_roi(above_ground, map.drive(), cfg.roi_margin);

  const std::vector<frustum::FrustumProposal> proposals =
      frustum::extract_frustums(filtered, frame.masks, frame.cameras,
                                frame.ego_pose, cfg.min_points);

  const geom::Vec2 ego_bev = frame.ego_pose.translation.head<2>();
  std::vector<MinedCuboid> cands;
  for (const frustum::FrustumProposal& prop : proposals) {
    const std::optional<int> target = cfg.target_of_raw(prop.class_id);
    if (!target) continue;  // 2D class outside the mining taxonomy
    const ClassParams& params = cfg.classes[*target];

    geom::PointCloud pts;
    pts.reserve(prop.point_indices.size());
    std::vector<geom::Vec2> bev;
    bev.reserve(prop.point_indices.size());
    for (int idx : prop.point_indices) {
      pts.push_back(filtered[idx]);
      bev.push_back(filtered[idx].head<2>());
    }

    const geom::Vec3 seed = seed_point(pts);
    const double ground_z = map.ground_height_or(
        seed.head<2>(),
        std::min_element(pts.begin(), pts.end(),
                         [](const geom::Vec3& a, const geom::Vec3& b) {
                           return a.z() < b.z();
                         })
            ->z());

    const OrientationMode mode =
        cfg.orientation_override.value_or(params.orientation);
    double theta;
    if (mode == OrientationMode::kMap) {
      const std::optional<double> lane_theta =
          orient_by_map(seed, map.lane_index(), cfg.max_lane_dist);
      theta = lane_theta ? *lane_theta : orient_by_calipers(bev);
    } else {
      theta = orient_by_calipers(bev);
    }

    const geom::PointCloud instance =
        clip_instance(filtered, seed, theta, params, ground_z);
    if (instance.empty()) continue;

    MinedCuboid mined;
    mined.cuboid = amodal_complete(initial_cuboid(instance, theta, ground_z),
                                   ego_bev, params, ground_z);
    mined.class_id = *target;
    mined.confidence = score(prop.confidence);
    cands.push_back(std::move(mined));
  }

  return apply_confidence_policy(nms_bev(std::move(cands), cfg.nms_iou),
                                 cfg.classes);
}

}  // namespace mine3d::inflate
