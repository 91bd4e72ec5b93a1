#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mine3d/geom.hpp"
#include "mine3d/hdmap.hpp"

namespace mine3d::frustum {

// One 2D instance detection: a bit-packed boolean bitmap over the camera
// image, the 2D model's raw class id, and its confidence.
struct InstanceMask {
  int camera_id = 0;
  int class_id = 0;
  float confidence = 0;
  int width = 0, height = 0;
  std::vector<uint8_t> bits;  // ceil(width*height/8), row-major, LSB first

  static InstanceMask blank(int camera_id, int class_id, float confidence,
                            int width, int height);
  bool test(int u, int v) const {
    const size_t i = static_cast<size_t>(v) * width + u;
    return (bits[i >> 3] >> (i & 7)) & 1;
  }
  void set(int u, int v) {
    const size_t i = static_cast<size_t>(v) * width + u;
    bits[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
  }
  size_t count() const;
};

// Indices (into the frame's filtered cloud) of the LiDAR points inside one
// mask's viewing frustum, with the mask's class and confidence carried
// along. `low_quality` marks proposals below the configured minimum size.
struct FrustumProposal {
  std::vector<int> point_indices;
  int class_id = 0;
  float confidence = 0;
  int camera_id = 0;
  bool low_quality = false;
};

// Keeps points more than `eps` above the interpolated ground height.
// Points outside the height raster are kept.
geom::PointCloud remove_ground(const geom::PointCloud& map_cloud,
                               const hdmap::Raster& ground, double eps);

// Keeps points within `margin` meters of the driveable area.
geom::PointCloud filter_roi(const geom::PointCloud& map_cloud,
                            const hdmap::DistanceField& drive, double margin);

// Backprojects each mask onto the cloud: a point joins a proposal when its
// pinhole projection (map -> ego -> camera) rounds onto a set bitmap cell
// with positive depth. Masks catching zero points are dropped. Throws
// BadCalibration for unknown camera ids.
std::vector<FrustumProposal> extract_frustums(
    const geom::PointCloud& map_cloud,
    const std::vector<InstanceMask>& masks,
    const std::map<int, geom::CameraModel>& cameras, const geom::Pose& ego,
    int min_points = 5);

}  // namespace mine3d::frustum
