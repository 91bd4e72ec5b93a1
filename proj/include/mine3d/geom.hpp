#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

namespace mine3d::geom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// A LiDAR sweep or any ordered point set, right-handed frame, z up, meters.
using PointCloud = std::vector<Vec3>;

// Rigid transform: p_out = rotation * p_in + translation.
// The rotation must be orthonormal with determinant +1.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose compose(const Pose& inner) const;  // this ∘ inner

  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  // True when rotation is orthonormal with det +1 within tol.
  bool is_rigid(double tol = 1e-9) const;
};

// Pinhole camera. Camera frame: +z forward (optical axis), +x right, +y down;
// u = fx*x/z + cx, v = fy*y/z + cy. `extrinsic` maps ego-frame points into
// the camera frame.
struct CameraModel {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
  Pose extrinsic;
};

// Amodal 3D box: center (x,y,z), size (w,l,h) with l along the heading axis
// theta and w across it, h vertical. theta is measured from +x,
// counterclockwise, wrapped to (-pi, pi].
struct Cuboid {
  double x = 0, y = 0, z = 0;
  double w = 1, l = 1, h = 1;
  double theta = 0;

  Vec2 center_bev() const { return {x, y}; }
};

// Oriented BEV rectangle. Axis 1 is the longer axis by construction
// (extent1 >= extent2 > 0); `angle` is the direction of axis 1 normalized to
// (-pi/2, pi/2].
struct BevRect {
  Vec2 center = Vec2::Zero();
  double extent1 = 0;
  double extent2 = 0;
  double angle = 0;
};

struct Projection {
  double u = 0, v = 0;
  double depth = 0;
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// Wraps an axis direction (heading-ambiguous angle) into (-pi/2, pi/2].
double wrap_axis_angle(double a);

// Point minimizing the sum of Euclidean distances to `cloud` (Weiszfeld
// iteration with the coincident-point subgradient guard). Stops when the
// iterate moves less than `tol` meters. Throws EmptyInput.
Vec3 geometric_median(const PointCloud& cloud, double tol = 1e-6,
                      int max_iter = 200);

// Convex hull (monotone chain), counterclockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

// Minimum-area oriented bounding rectangle via rotating calipers over the
// hull edges. Collinear or single-point inputs are widened to
// `degenerate_extent` on the missing axes. Area ties pick the lower angle.
// Throws EmptyInput.
BevRect min_area_rect(const std::vector<Vec2>& points,
                      double degenerate_extent = 0.01);

// The 8 box corners. Order: indices 0-3 bottom ring (z - h/2), 4-7 top ring;
// within a ring, heading-frame offsets (+l/2,+w/2), (-l/2,+w/2), (-l/2,-w/2),
// (+l/2,-w/2) — counterclockwise in BEV.
std::array<Vec3, 8> cuboid_corners(const Cuboid& c);

// BEV footprint corners, counterclockwise, same in-ring order as above.
std::array<Vec2, 4> cuboid_bev_corners(const Cuboid& c);

// Signed area (shoelace); positive for counterclockwise polygons.
double polygon_area(const std::vector<Vec2>& poly);

// Intersection of two convex polygons (Sutherland-Hodgman). Both inputs must
// be counterclockwise.
std::vector<Vec2> convex_intersect(const std::vector<Vec2>& subject,
                                   const std::vector<Vec2>& clip);

// IoU of the yawed BEV footprints. Symmetric; 1 iff identical footprints.
// Intersection areas below 1e-12 m^2 count as 0.
double bev_iou(const Cuboid& a, const Cuboid& b);

// Pinhole projection of an ego-frame point. Empty when the point is at or
// behind the camera plane (depth <= 0) or lands outside [0,width)x[0,height).
std::optional<Projection> project_point(const CameraModel& cam,
                                        const Vec3& ego_point);

}  // namespace mine3d::geom
