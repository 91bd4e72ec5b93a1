#include "mine3d/frustum.hpp"

#include <cmath>

#include "mine3d/errors.hpp"

namespace mine3d::frustum {

InstanceMask InstanceMask::blank(int camera_id, int class_id, float confidence,
                                 int width, int height) {
  InstanceMask m;
  m.camera_id = camera_id;
  m.class_id = class_id;
  m.confidence = confidence;
  m.width = width;
  m.height = height;
  m.bits.assign((static_cast<size_t>(width) * height + 7) / 8, 0);
  return m;
}

size_t InstanceMask::count() const {
  size_t n = 0;
  for (uint8_t b : bits) n += static_cast<size_t>(__builtin_popcount(b));
  return n;
}

geom::PointCloud remove_ground(const geom::PointCloud& map_cloud,
                               const hdmap::Raster& ground, double eps) {
  geom::PointCloud out;
  out.reserve(map_cloud.size());
  for (const geom::Vec3& p : map_cloud) {
    const geom::Vec2 bev = p.head<2>();
    if (!ground.contains(bev)) {
      out.push_back(p);
      continue;
    }
    if (p.z() > hdmap::ground_height_at(ground, bev) + eps) out.push_back(p);
  }
  return out;
}

geom::PointCloud filter_roi(const geom::PointCloud& map_cloud,
                            const hdmap::DistanceField& drive, double margin) {
  geom::PointCloud out;
  out.reserve(map_cloud.size());
  for (const geom::Vec3& p : map_cloud)
    if (drive.in_roi(p.head<2>(), margin)) out.push_back(p);
  return out;
}

std::vector<FrustumProposal> extract_frustums(
    const geom::PointCloud& map_cloud, const std::vector<InstanceMask>& masks,
    const std::map<int, geom::CameraModel>& cameras, const geom::Pose& ego,
    int min_points) {
  const geom::Pose map_to_ego = ego.inverse();
  std::vector<FrustumProposal> out;
  out.reserve(masks.size());

  for (const InstanceMask& mask : masks) {
    const auto it = cameras.find(mask.camera_id);
    if (it == cameras.end())
      throw BadCalibration("extract_frustums: no calibration for camera id " +
                           std::to_string(mask.camera_id));
    const geom::CameraModel& cam = it->second;

    FrustumProposal prop;
    prop.class_id = mask.class_id;
    prop.confidence = mask.confidence;
    prop.camera_id = mask.camera_id;
    for (size_t i = 0; i < map_cloud.size(); ++i) {
      const auto proj = geom::project_point(cam, map_to_ego.apply(map_cloud[i]));
      if (!proj) continue;
      const int u = static_cast<int>(std::lround(proj->u));
      const int v = static_cast<int>(std::lround(proj->v));
      if (u < 0 || v < 0 || u >= mask.width || v >= mask.height) continue;
      if (mask.test(u, v)) prop.point_indices.push_back(static_cast<int>(i));
    }
    if (prop.point_indices.empty()) continue;
    prop.low_quality =
        prop.point_indices.size() < static_cast<size_t>(min_points);
    out.push_back(std::move(prop));
  }
  return out;
}

}  // namespace mine3d::frustum
