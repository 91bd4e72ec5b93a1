#include "mine3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mine3d/errors.hpp"

namespace mine3d::synth {

namespace {

using geom::Vec2;
using geom::Vec3;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

// Stream purposes for RNG keying.
enum Stream : uint64_t {
  kEgo = 1,
  kPlace = 2,
  kSurface = 3,
  kGroundPts = 4,
  kClutter = 5,
  kMaskConf = 6,
  kCorrupt = 7,
};

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

uint64_t stream_key(uint64_t seed, int frame, uint64_t purpose,
                    uint64_t entity) {
  uint64_t k = mix64(seed + 0x9e3779b97f4a7c15ull);
  k = mix64(k ^ (static_cast<uint64_t>(frame) + 0xd1b54a32d192ed03ull));
  k = mix64(k ^ (purpose * 0x2545f4914f6cdd1dull));
  k = mix64(k ^ (entity + 0x6a09e667f3bcc909ull));
  return k;
}

struct ClassShape {
  const char* name;
  double l, w, h;
  std::vector<int> raw_ids;  // cycled per instance
  bool on_lane;
};

const std::vector<ClassShape>& class_shapes() {
  static const std::vector<ClassShape> shapes = {
      {"vehicle", 4.5, 1.85, 1.55, {2, 7}, true},
      {"bus", 11.0, 2.7, 3.2, {5}, true},
      {"bicycle", 1.7, 0.6, 1.2, {1}, true},
      {"pedestrian", 0.55, 0.55, 1.75, {0}, false},
  };
  return shapes;
}

const ClassShape* shape_of(const std::string& name) {
  for (const ClassShape& s : class_shapes())
    if (name == s.name) return &s;
  return nullptr;
}

double analytic_ground(const SceneSpec& spec, double x) {
  return spec.ground_slope * x;
}

double lane_center_y(const LaneLayout& lanes, int lane) {
  return (lane - 0.5 * (lanes.count - 1)) * lanes.spacing;
}

// Rasterizes a convex hull into a mask bitmap. Pixel centers sit on integer
// coordinates; a pixel is set when the hull overlaps its unit square, so any
// point inside the hull rounds onto a set pixel. Per row, the x-range is
// taken over the row's half-pixel band (band-edge scanlines plus vertices
// inside the band — exact for convex polygons).
size_t fill_convex(frustum::InstanceMask& mask, const std::vector<Vec2>& hull) {
  if (hull.size() < 3) return 0;
  double ymin = hull[0].y(), ymax = ymin;
  for (const Vec2& p : hull) {
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  size_t filled = 0;
  const int v0 = std::max(0, static_cast<int>(std::ceil(ymin - 0.5)));
  const int v1 =
      std::min(mask.height - 1, static_cast<int>(std::floor(ymax + 0.5)));
  for (int v = v0; v <= v1; ++v) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    auto scan = [&](double y) {
      for (size_t i = 0; i < hull.size(); ++i) {
        const Vec2& a = hull[i];
        const Vec2& b = hull[(i + 1) % hull.size()];
        if ((a.y() <= y && b.y() > y) || (b.y() <= y && a.y() > y)) {
          const double t = (y - a.y()) / (b.y() - a.y());
          const double x = a.x() + t * (b.x() - a.x());
          xlo = std::min(xlo, x);
          xhi = std::max(xhi, x);
        }
        if (a.y() == y) {
          xlo = std::min(xlo, a.x());
          xhi = std::max(xhi, a.x());
        }
      }
    };
    scan(std::clamp(v - 0.5, ymin, ymax));
    scan(std::clamp(v + 0.5, ymin, ymax));
    for (const Vec2& p : hull)
      if (p.y() >= v - 0.5 && p.y() <= v + 0.5) {
        xlo = std::min(xlo, p.x());
        xhi = std::max(xhi, p.x());
      }
    if (!(xlo <= xhi)) continue;
    const int u0 = std::max(0, static_cast<int>(std::ceil(xlo - 0.5)));
    const int u1 =
        std::min(mask.width - 1, static_cast<int>(std::floor(xhi + 0.5)));
    for (int u = u0; u <= u1; ++u) {
      mask.set(u, v);
      ++filled;
    }
  }
  return filled;
}

// Separation test in each box's heading frame: objects keep a headway gap
// along the travel axis and a small lateral shoulder, so lane neighbors are
// allowed but tailgating is not.
bool too_close(const geom::Cuboid& a, const geom::Cuboid& b) {
  auto crowded = [](const geom::Cuboid& ref, const geom::Cuboid& other) {
    const double ct = std::cos(ref.theta), st = std::sin(ref.theta);
    const double dx = other.x - ref.x, dy = other.y - ref.y;
    const double along = std::abs(ct * dx + st * dy);
    const double cross = std::abs(-st * dx + ct * dy);
    return along < 0.5 * (ref.l + other.l) + 4.0 &&
           cross < 0.5 * (ref.w + other.w) + 0.4;
  };
  return crowded(a, b) || crowded(b, a) || geom::bev_iou(a, b) > 0.0;
}

void validate_spec(const SceneSpec& spec) {
  if (spec.frames < 1) throw Error("scene spec: frames must be >= 1");
  if (spec.lanes.count < 1 || spec.lanes.length <= 0 ||
      spec.lanes.spacing <= 0 || spec.lanes.sample_step <= 0)
    throw Error("scene spec: invalid lane layout");
  if (spec.sensors.cameras < 1 || spec.sensors.points_per_m2 <= 0 ||
      spec.sensors.noise_sigma < 0)
    throw Error("scene spec: invalid sensor spec");
  if (spec.occlusion_fraction < 0 || spec.occlusion_fraction > 1)
    throw Error("scene spec: occlusion_fraction outside [0,1]");
  if (spec.heading_noise_sigma < 0)
    throw Error("scene spec: negative heading noise");
  if (spec.raster_resolution <= 0)
    throw Error("scene spec: invalid raster resolution");
  for (const auto& [name, count] : spec.objects) {
    if (!shape_of(name)) throw Error("scene spec: unknown class '" + name + "'");
    if (count < 0) throw Error("scene spec: negative object count");
  }
}

}  // namespace

CounterRng::CounterRng(uint64_t seed, uint64_t stream)
    : key_(mix64(seed ^ mix64(stream))) {}

uint64_t CounterRng::next_u64() { return mix64(key_ + (++counter_)); }

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int CounterRng::uniform_int(int n) {
  return static_cast<int>(uniform() * n) % n;
}

double CounterRng::normal(double sigma) {
  // Box-Muller; one value per call keeps the stream layout simple.
  const double u1 = std::max(uniform(), 1e-300);
  const double u2 = uniform();
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

GroundTruthScene generate_scene(const SceneSpec& spec, int frame_index) {
  validate_spec(spec);

  GroundTruthScene scene;
  scene.seed = spec.seed;
  scene.frame_index = frame_index;

  const double half_len = 0.5 * spec.lanes.length;

  // Lanes: parabolic bend y += curvature*x^2/2; odd lanes digitized in the
  // opposite travel direction.
  for (int li = 0; li < spec.lanes.count; ++li) {
    std::vector<Vec3> lane;
    const double y0 = lane_center_y(spec.lanes, li);
    for (double x = -half_len; x <= half_len + 1e-9;
         x += spec.lanes.sample_step) {
      const double y = y0 + 0.5 * spec.lanes.curvature * x * x;
      lane.emplace_back(x, y, analytic_ground(spec, x));
    }
    if (li % 2 == 1) std::reverse(lane.begin(), lane.end());
    scene.lanes.lanes.push_back(std::move(lane));
  }

  // Rasters cover the road with a 15 m apron.
  const double bend = 0.5 * std::abs(spec.lanes.curvature) * half_len * half_len;
  const double y_road_min = lane_center_y(spec.lanes, 0) - bend;
  const double y_road_max =
      lane_center_y(spec.lanes, spec.lanes.count - 1) + bend;
  const double apron = 15.0;
  const double res = spec.raster_resolution;
  hdmap::Raster base;
  base.origin = Vec2(-half_len - apron, y_road_min - apron);
  base.resolution = res;
  base.cols = static_cast<int>(std::ceil((spec.lanes.length + 2 * apron) / res));
  base.rows =
      static_cast<int>(std::ceil((y_road_max - y_road_min + 2 * apron) / res));
  base.values.assign(static_cast<size_t>(base.rows) * base.cols, 0.0f);

  scene.ground = base;
  for (int r = 0; r < base.rows; ++r)
    for (int c = 0; c < base.cols; ++c)
      scene.ground.at(r, c) = static_cast<float>(
          analytic_ground(spec, scene.ground.cell_center(r, c).x()));

  // Driveable corridor: cells within half a lane spacing (plus shoulder) of
  // any centerline.
  const double corridor = 0.5 * spec.lanes.spacing + 1.0;
  const hdmap::LaneIndex lane_index(scene.lanes);
  scene.drive = base;
  for (int r = 0; r < base.rows; ++r) {
    for (int c = 0; c < base.cols; ++c) {
      const Vec2 center = scene.drive.cell_center(r, c);
      scene.drive.at(r, c) =
          lane_index.nearest_tangent(center).distance <= corridor ? 1.0f : 0.0f;
    }
  }
  const hdmap::DistanceField drive_field(scene.drive);

  // Ego: on the road, aligned with it, origin at ground level.
  {
    CounterRng rng(spec.seed, stream_key(spec.seed, frame_index, kEgo, 0));
    const double ego_x = rng.uniform(-half_len + 20.0, half_len - 20.0);
    const int ego_lane = spec.lanes.count / 2;
    const double ego_y = lane_center_y(spec.lanes, ego_lane) +
                         0.5 * spec.lanes.curvature * ego_x * ego_x +
                         rng.uniform(-0.5, 0.5);
    const double yaw =
        std::atan(spec.lanes.curvature * ego_x) + rng.uniform(-0.05, 0.05);
    scene.ego = geom::Pose::from_yaw(
        yaw, Vec3(ego_x, ego_y, analytic_ground(spec, ego_x)));
  }
  const Vec3 sensor_pos =
      scene.ego.apply(Vec3(0, 0, spec.sensors.lidar_height));

  // Objects: lane-bound classes sit on a lane segment with yaw equal to the
  // segment direction plus heading noise; pedestrians stand off the road
  // edge inside the ROI band.
  int entity = 0;
  for (const auto& [name, count] : spec.objects) {
    const ClassShape& shape = *shape_of(name);
    for (int k = 0; k < count; ++k, ++entity) {
      CounterRng rng(spec.seed,
                     stream_key(spec.seed, frame_index, kPlace, entity));
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        GtObject obj;
        obj.class_name = name;
        obj.raw_class_id = shape.raw_ids[k % shape.raw_ids.size()];
        geom::Cuboid& c = obj.cuboid;
        c.l = shape.l * rng.uniform(0.92, 1.08);
        c.w = shape.w * rng.uniform(0.92, 1.08);
        c.h = shape.h * rng.uniform(0.92, 1.08);

        if (shape.on_lane) {
          const int li = rng.uniform_int(spec.lanes.count);
          const auto& lane = scene.lanes.lanes[li];
          const int si = rng.uniform_int(static_cast<int>(lane.size()) - 1);
          const Vec3 a = lane[si], b = lane[si + 1];
          const double t = rng.uniform(0.3, 0.7);
          const Vec3 pos = a + t * (b - a);
          const double lane_theta =
              std::atan2(b.y() - a.y(), b.x() - a.x());
          c.x = pos.x();
          c.y = pos.y();
          c.theta = geom::wrap_angle(
              lane_theta + (spec.heading_noise_sigma > 0
                                ? rng.normal(spec.heading_noise_sigma)
                                : 0.0));
        } else {
          const double x = rng.uniform(-half_len + 5.0, half_len - 5.0);
          const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
          const double edge =
              side < 0 ? y_road_min - corridor : y_road_max + corridor;
          c.x = x;
          c.y = edge + side * rng.uniform(0.5, 2.5) +
                0.5 * spec.lanes.curvature * x * x;
          c.theta = geom::wrap_angle(rng.uniform(-kPi, kPi));
        }
        c.z = hdmap::ground_height_at(scene.ground, c.center_bev()) +
              0.5 * c.h;

        const double ego_dist =
            (c.center_bev() - scene.ego.translation.head<2>()).norm();
        if (ego_dist < 6.0 || ego_dist > 45.0) continue;
        bool overlap = false;
        for (const GtObject& other : scene.objects) {
          if (too_close(c, other.cuboid)) {
            overlap = true;
            break;
          }
        }
        if (overlap) continue;
        scene.objects.push_back(std::move(obj));
        placed = true;
      }
      if (!placed)
        throw PlacementFailed("cannot place object " + std::to_string(entity) +
                              " of class " + name + " (seed " +
                              std::to_string(spec.seed) + ", frame " +
                              std::to_string(frame_index) + ")");
    }
  }

  // LiDAR surface sampling on sensor-facing faces, quadratic falloff with
  // range, optional uniform occlusion drop.
  for (size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const geom::Cuboid& c = scene.objects[oi].cuboid;
    CounterRng rng(spec.seed, stream_key(spec.seed, frame_index, kSurface,
                                         static_cast<uint64_t>(oi)));
    const double ct = std::cos(c.theta), st = std::sin(c.theta);
    const Vec3 axis1(ct, st, 0), axis2(-st, ct, 0), axis3(0, 0, 1);
    const Vec3 center(c.x, c.y, c.z);
    struct Face {
      Vec3 normal, t1, t2;
      double half1, half2, offset;
      double area;
    };
    const Face faces[6] = {
        {axis1, axis2, axis3, 0.5 * c.w, 0.5 * c.h, 0.5 * c.l, c.w * c.h},
        {-axis1, axis2, axis3, 0.5 * c.w, 0.5 * c.h, 0.5 * c.l, c.w * c.h},
        {axis2, axis1, axis3, 0.5 * c.l, 0.5 * c.h, 0.5 * c.w, c.l * c.h},
        {-axis2, axis1, axis3, 0.5 * c.l, 0.5 * c.h, 0.5 * c.w, c.l * c.h},
        {axis3, axis1, axis2, 0.5 * c.l, 0.5 * c.w, 0.5 * c.h, c.l * c.w},
        {-axis3, axis1, axis2, 0.5 * c.l, 0.5 * c.w, 0.5 * c.h, c.l * c.w},
    };
    for (const Face& f : faces) {
      const Vec3 fc = center + f.normal * f.offset;
      if ((sensor_pos - fc).dot(f.normal) <= 1e-9) continue;  // hidden face
      const double dist = (sensor_pos - fc).norm();
      const double falloff = std::min(1.0, (15.0 * 15.0) / (dist * dist));
      const int n = std::min(
          4000, std::max(3, static_cast<int>(std::ceil(
                                f.area * spec.sensors.points_per_m2 * falloff))));
      for (int i = 0; i < n; ++i) {
        const double a = rng.uniform(-f.half1, f.half1);
        const double b = rng.uniform(-f.half2, f.half2);
        Vec3 p = fc + f.t1 * a + f.t2 * b;
        if (spec.sensors.noise_sigma > 0)
          p += Vec3(rng.normal(spec.sensors.noise_sigma),
                    rng.normal(spec.sensors.noise_sigma),
                    rng.normal(spec.sensors.noise_sigma));
        if (spec.occlusion_fraction > 0 &&
            rng.uniform() < spec.occlusion_fraction)
          continue;
        scene.cloud_map.push_back(p);
        scene.point_object.push_back(static_cast<int>(oi));
      }
    }
  }

  // Ground returns over the driveable corridor.
  {
    CounterRng rng(spec.seed, stream_key(spec.seed, frame_index, kGroundPts, 0));
    std::vector<std::pair<int, int>> drive_cells;
    for (int r = 0; r < scene.drive.rows; ++r)
      for (int c = 0; c < scene.drive.cols; ++c)
        if (scene.drive.at(r, c) > 0.5f) drive_cells.emplace_back(r, c);
    const double area = static_cast<double>(drive_cells.size()) * res * res;
    const int n = static_cast<int>(area * spec.ground_points_per_m2);
    for (int i = 0; i < n && !drive_cells.empty(); ++i) {
      const auto [r, c] = drive_cells[rng.uniform_int(
          static_cast<int>(drive_cells.size()))];
      const Vec2 lo = scene.drive.origin + Vec2(c * res, r * res);
      const Vec2 p(lo.x() + rng.uniform(0.0, res),
                   lo.y() + rng.uniform(0.0, res));
      double z = hdmap::ground_height_at(scene.ground, p);
      if (spec.sensors.noise_sigma > 0)
        z += rng.normal(spec.sensors.noise_sigma);
      scene.cloud_map.push_back(Vec3(p.x(), p.y(), z));
      scene.point_object.push_back(-1);
    }
  }

  // Clutter well outside the ROI band, floating above the ground so only
  // the ROI filter removes it.
  {
    CounterRng rng(spec.seed, stream_key(spec.seed, frame_index, kClutter, 0));
    int made = 0;
    for (int tries = 0; made < spec.clutter_points && tries < 10000; ++tries) {
      const Vec2 p(
          rng.uniform(base.origin.x() + res,
                      base.origin.x() + base.cols * res - res),
          rng.uniform(base.origin.y() + res,
                      base.origin.y() + base.rows * res - res));
      if (drive_field.in_roi(p, 8.0)) continue;
      const double z =
          hdmap::ground_height_at(scene.ground, p) + rng.uniform(0.5, 2.5);
      scene.cloud_map.push_back(Vec3(p.x(), p.y(), z));
      scene.point_object.push_back(-2);
      ++made;
    }
  }

  // Ring cameras. Camera frame: +z forward, +x right, +y down.
  for (int ci = 0; ci < spec.sensors.cameras; ++ci) {
    const double psi = 2.0 * kPi * ci / spec.sensors.cameras;
    geom::CameraModel cam;
    cam.width = spec.sensors.image_width;
    cam.height = spec.sensors.image_height;
    cam.fx = cam.fy = (cam.width / 2.0) /
                      std::tan(0.5 * spec.sensors.fov_deg * kPi / 180.0);
    cam.cx = cam.width / 2.0;
    cam.cy = cam.height / 2.0;
    geom::Mat3 ego_from_cam;
    const Vec3 forward(std::cos(psi), std::sin(psi), 0);
    const Vec3 right(std::sin(psi), -std::cos(psi), 0);
    const Vec3 down(0, 0, -1);
    ego_from_cam.col(0) = right;
    ego_from_cam.col(1) = down;
    ego_from_cam.col(2) = forward;
    const Vec3 cam_center(0, 0, spec.sensors.camera_height);
    cam.extrinsic.rotation = ego_from_cam.transpose();
    cam.extrinsic.translation = -(cam.extrinsic.rotation * cam_center);
    scene.cameras[ci] = cam;
  }

  // Masks: filled convex hull of the projected cuboid corners, one mask per
  // (object, camera) pair that sees the whole object in front of the lens.
  const geom::Pose map_to_ego = scene.ego.inverse();
  for (size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const auto corners = geom::cuboid_corners(scene.objects[oi].cuboid);
    for (const auto& [cam_id, cam] : scene.cameras) {
      std::vector<Vec2> px;
      px.reserve(8);
      bool ok = true;
      for (const Vec3& corner : corners) {
        const Vec3 pc = cam.extrinsic.apply(map_to_ego.apply(corner));
        if (pc.z() < 0.3) {
          ok = false;
          break;
        }
        px.emplace_back(cam.fx * pc.x() / pc.z() + cam.cx,
                        cam.fy * pc.y() / pc.z() + cam.cy);
      }
      if (!ok) continue;
      CounterRng rng(spec.seed,
                     stream_key(spec.seed, frame_index, kMaskConf,
                                oi * 64 + static_cast<uint64_t>(cam_id)));
      frustum::InstanceMask mask = frustum::InstanceMask::blank(
          cam_id, scene.objects[oi].raw_class_id,
          static_cast<float>(rng.uniform(spec.conf_lo, spec.conf_hi)),
          cam.width, cam.height);
      if (fill_convex(mask, geom::convex_hull(px)) == 0) continue;
      scene.masks.push_back(std::move(mask));
      scene.mask_object.push_back(static_cast<int>(oi));
    }
  }

  return scene;
}

void corrupt_masks(GroundTruthScene& scene, double drop_rate, int dilate_px) {
  if (drop_rate < 0 || drop_rate > 1)
    throw Error("corrupt_masks: drop_rate outside [0,1]");
  std::vector<frustum::InstanceMask> masks;
  std::vector<int> owners;
  for (size_t mi = 0; mi < scene.masks.size(); ++mi) {
    CounterRng rng(scene.seed, stream_key(scene.seed, scene.frame_index,
                                          kCorrupt, static_cast<uint64_t>(mi)));
    if (rng.uniform() < drop_rate) continue;
    frustum::InstanceMask m = scene.masks[mi];
    if (dilate_px > 0) {
      // Chebyshev dilation: horizontal pass then vertical pass.
      frustum::InstanceMask tmp = frustum::InstanceMask::blank(
          m.camera_id, m.class_id, m.confidence, m.width, m.height);
      for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u) {
          bool on = false;
          for (int d = -dilate_px; d <= dilate_px && !on; ++d) {
            const int uu = u + d;
            if (uu >= 0 && uu < m.width && m.test(uu, v)) on = true;
          }
          if (on) tmp.set(u, v);
        }
      frustum::InstanceMask out = frustum::InstanceMask::blank(
          m.camera_id, m.class_id, m.confidence, m.width, m.height);
      for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u) {
          bool on = false;
          for (int d = -dilate_px; d <= dilate_px && !on; ++d) {
            const int vv = v + d;
            if (vv >= 0 && vv < m.height && tmp.test(u, vv)) on = true;
          }
          if (on) out.set(u, v);
        }
      m = std::move(out);
    }
    masks.push_back(std::move(m));
    owners.push_back(scene.mask_object[mi]);
  }
  scene.masks = std::move(masks);
  scene.mask_object = std::move(owners);
}

inflate::Frame scene_to_frame(const GroundTruthScene& scene,
                              const std::string& frame_id) {
  inflate::Frame frame;
  frame.frame_id = frame_id;
  frame.masks = scene.masks;
  frame.cameras = scene.cameras;
  frame.ego_pose = scene.ego;
  const geom::Pose map_to_ego = scene.ego.inverse();
  frame.cloud_ego.reserve(scene.cloud_map.size());
  for (const Vec3& p : scene.cloud_map) {
    const Vec3 pe = map_to_ego.apply(p);
    frame.cloud_ego.emplace_back(static_cast<float>(pe.x()),
                                 static_cast<float>(pe.y()),
                                 static_cast<float>(pe.z()));
  }
  return frame;
}

std::vector<io::LabelRecord> scene_gt_labels(const GroundTruthScene& scene,
                                             const std::string& frame_id) {
  std::vector<io::LabelRecord> out;
  out.reserve(scene.objects.size());
  for (const GtObject& obj : scene.objects) {
    io::LabelRecord rec;
    rec.frame_id = frame_id;
    rec.class_name = obj.class_name;
    rec.x = obj.cuboid.x;
    rec.y = obj.cuboid.y;
    rec.z = obj.cuboid.z;
    rec.w = obj.cuboid.w;
    rec.l = obj.cuboid.l;
    rec.h = obj.cuboid.h;
    rec.theta = obj.cuboid.theta;
    rec.confidence = 1.0;
    rec.dont_care = false;
    out.push_back(std::move(rec));
  }
  return out;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  SceneSpec spec;
  try {
    spec.seed = j.value("seed", spec.seed);
    spec.frames = j.value("frames", spec.frames);
    if (j.contains("objects")) {
      spec.objects.clear();
      for (const auto& [name, count] : j["objects"].items())
        spec.objects[name] = count.get<int>();
    }
    if (j.contains("lanes")) {
      const auto& jl = j["lanes"];
      spec.lanes.count = jl.value("count", spec.lanes.count);
      spec.lanes.length = jl.value("length", spec.lanes.length);
      spec.lanes.spacing = jl.value("spacing", spec.lanes.spacing);
      spec.lanes.curvature = jl.value("curvature", spec.lanes.curvature);
      spec.lanes.sample_step = jl.value("sample_step", spec.lanes.sample_step);
    }
    if (j.contains("sensors")) {
      const auto& js = j["sensors"];
      spec.sensors.cameras = js.value("cameras", spec.sensors.cameras);
      spec.sensors.image_width =
          js.value("image_width", spec.sensors.image_width);
      spec.sensors.image_height =
          js.value("image_height", spec.sensors.image_height);
      spec.sensors.fov_deg = js.value("fov_deg", spec.sensors.fov_deg);
      spec.sensors.points_per_m2 =
          js.value("points_per_m2", spec.sensors.points_per_m2);
      spec.sensors.noise_sigma =
          js.value("noise_sigma", spec.sensors.noise_sigma);
      spec.sensors.lidar_height =
          js.value("lidar_height", spec.sensors.lidar_height);
      spec.sensors.camera_height =
          js.value("camera_height", spec.sensors.camera_height);
    }
    spec.occlusion_fraction =
        j.value("occlusion_fraction", spec.occlusion_fraction);
    spec.heading_noise_sigma =
        j.value("heading_noise_sigma", spec.heading_noise_sigma);
    spec.ground_slope = j.value("ground_slope", spec.ground_slope);
    spec.raster_resolution =
        j.value("raster_resolution", spec.raster_resolution);
    if (j.contains("confidence_range")) {
      spec.conf_lo = j["confidence_range"].at(0);
      spec.conf_hi = j["confidence_range"].at(1);
    }
    spec.ground_points_per_m2 =
        j.value("ground_points_per_m2", spec.ground_points_per_m2);
    spec.clutter_points = j.value("clutter_points", spec.clutter_points);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  validate_spec(spec);
  return spec;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  ordered_json j;
  j["seed"] = spec.seed;
  j["frames"] = spec.frames;
  j["objects"] = spec.objects;
  j["lanes"] = {{"count", spec.lanes.count},
                {"length", spec.lanes.length},
                {"spacing", spec.lanes.spacing},
                {"curvature", spec.lanes.curvature},
                {"sample_step", spec.lanes.sample_step}};
  j["sensors"] = {{"cameras", spec.sensors.cameras},
                  {"image_width", spec.sensors.image_width},
                  {"image_height", spec.sensors.image_height},
                  {"fov_deg", spec.sensors.fov_deg},
                  {"points_per_m2", spec.sensors.points_per_m2},
                  {"noise_sigma", spec.sensors.noise_sigma},
                  {"lidar_height", spec.sensors.lidar_height},
                  {"camera_height", spec.sensors.camera_height}};
  j["occlusion_fraction"] = spec.occlusion_fraction;
  j["heading_noise_sigma"] = spec.heading_noise_sigma;
  j["ground_slope"] = spec.ground_slope;
  j["raster_resolution"] = spec.raster_resolution;
  j["confidence_range"] = {spec.conf_lo, spec.conf_hi};
  j["ground_points_per_m2"] = spec.ground_points_per_m2;
  j["clutter_points"] = spec.clutter_points;
  return j.dump(2);
}

void write_dataset(const SceneSpec& spec,
                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "map");
  fs::create_directories(out_dir / "frames");
  fs::create_directories(out_dir / "gt");

  for (int fi = 0; fi < spec.frames; ++fi) {
    const GroundTruthScene scene = generate_scene(spec, fi);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", fi);
    const std::string frame_id(buf);

    if (fi == 0) {  // the map is shared by construction
      io::write_lane_graph(out_dir / "map" / "lanes.json", scene.lanes);
      io::write_raster(out_dir / "map" / "ground.rstr", scene.ground);
      io::write_raster(out_dir / "map" / "drive.rstr", scene.drive);
    }
    const fs::path frame_dir = out_dir / "frames" / frame_id;
    fs::create_directories(frame_dir);
    const inflate::Frame frame = scene_to_frame(scene, frame_id);
    io::write_point_cloud(frame_dir / "points.ldr", frame.cloud_ego);
    io::write_masks(frame_dir / "masks.msk", scene.masks);
    io::write_pose(frame_dir / "ego_pose.json", scene.ego);
    io::write_cameras(frame_dir / "cameras.json", scene.cameras);
    io::write_labels(out_dir / "gt" / (frame_id + ".jsonl"),
                     scene_gt_labels(scene, frame_id));
  }
}

}  // namespace mine3d::synth
