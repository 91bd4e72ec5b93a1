#include "mine3d/geom.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mine3d/errors.hpp"

namespace mine3d::geom {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Treat an iterate as sitting on a data point below this distance.
constexpr double kCoincidentDist = 1e-12;

// Intersection areas below this are numerical noise.
constexpr double kAreaFloor = 1e-12;

}  // namespace

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::compose(const Pose& inner) const {
  Pose out;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation + translation;
  return out;
}

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  Pose p;
  const double c = std::cos(yaw), s = std::sin(yaw);
  p.rotation << c, -s, 0, s, c, 0, 0, 0, 1;
  p.translation = t;
  return p;
}

bool Pose::is_rigid(double tol) const {
  const Mat3 rrt = rotation * rotation.transpose();
  return (rrt - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double wrap_axis_angle(double a) {
  double r = std::remainder(a, kPi);
  if (r <= -kPi / 2.0) r += kPi;
  return r;
}

Vec3 geometric_median(const PointCloud& cloud, double tol, int max_iter) {
  if (cloud.empty()) throw EmptyInput("geometric_median: empty cloud");
  if (cloud.size() == 1) return cloud.front();

  Vec3 y = Vec3::Zero();
  for (const Vec3& p : cloud) y += p;
  y /= static_cast<double>(cloud.size());

  for (int iter = 0; iter < max_iter; ++iter) {
    Vec3 weighted = Vec3::Zero();
    double weight_sum = 0.0;
    Vec3 pull = Vec3::Zero();  // unit pulls of non-coincident points
    int coincident = 0;
    for (const Vec3& p : cloud) {
      const Vec3 d = p - y;
      const double dist = d.norm();
      if (dist < kCoincidentDist) {
        ++coincident;
        continue;
      }
      weighted += p / dist;
      weight_sum += 1.0 / dist;
      pull += d / dist;
    }
    if (weight_sum == 0.0) return y;  // all points coincide with y

    Vec3 next;
    if (coincident > 0) {
      // y sits on a data point: optimal iff the residual pull does not
      // exceed the point's multiplicity; otherwise step along the pull
      // (Vardi–Zhang correction).
      const double pull_norm = pull.norm();
      if (pull_norm <= static_cast<double>(coincident)) return y;
      next = y + (pull / pull_norm) *
                     ((pull_norm - static_cast<double>(coincident)) /
                      weight_sum);
    } else {
      next = weighted / weight_sum;
    }
    const double moved = (next - y).norm();
    y = next;
    if (moved < tol) break;
  }
  return y;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  const size_t n = pts.size();
  if (n <= 2) return pts;

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {  // upper
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

struct RectCandidate {
  double area = std::numeric_limits<double>::infinity();
  Vec2 center;
  double extent1 = 0, extent2 = 0;
  double angle = 0;  // axis-1 direction, normalized
};

// Evaluates the bounding rectangle of `pts` aligned with direction `dir`.
RectCandidate aligned_rect(const std::vector<Vec2>& pts, const Vec2& dir) {
  const Vec2 normal(-dir.y(), dir.x());
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const Vec2& p : pts) {
    const double u = p.dot(dir), v = p.dot(normal);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double eu = umax - umin, ev = vmax - vmin;
  const double angle_u = wrap_axis_angle(std::atan2(dir.y(), dir.x()));
  const double angle_v = wrap_axis_angle(std::atan2(normal.y(), normal.x()));
  RectCandidate c;
  c.area = eu * ev;
  c.center = dir * (0.5 * (umin + umax)) + normal * (0.5 * (vmin + vmax));
  // Axis 1 is the longer axis; equal extents pick the lower angle.
  if (eu > ev || (eu == ev && angle_u <= angle_v)) {
    c.extent1 = eu;
    c.extent2 = ev;
    c.angle = angle_u;
  } else {
    c.extent1 = ev;
    c.extent2 = eu;
    c.angle = angle_v;
  }
  return c;
}

}  // namespace

BevRect min_area_rect(const std::vector<Vec2>& points,
                      double degenerate_extent) {
  if (points.empty()) throw EmptyInput("min_area_rect: empty point set");

  const std::vector<Vec2> hull = convex_hull(points);

  BevRect rect;
  if (hull.size() == 1) {
    rect.center = hull[0];
    rect.extent1 = rect.extent2 = degenerate_extent;
    rect.angle = 0.0;
    return rect;
  }
  if (hull.size() == 2) {
    // Collinear set: span along the segment, clamp the missing axis.
    const Vec2 dir = (hull[1] - hull[0]).normalized();
    const RectCandidate c = aligned_rect(points, dir);
    rect.center = c.center;
    rect.extent1 = std::max(std::max(c.extent1, c.extent2), degenerate_extent);
    rect.extent2 = degenerate_extent;
    rect.angle = wrap_axis_angle(std::atan2(dir.y(), dir.x()));
    return rect;
  }

  RectCandidate best;
  double best_angle_key = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec2 edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = edge.norm();
    if (len < 1e-15) continue;
    const RectCandidate c = aligned_rect(hull, edge / len);
    // Lexicographic (area, angle); angle breaks exact-area ties.
    const double tol = 1e-12 * std::max(1.0, best.area);
    if (c.area < best.area - tol ||
        (std::abs(c.area - best.area) <= tol && c.angle < best_angle_key)) {
      best = c;
      best_angle_key = c.angle;
    }
  }
  rect.center = best.center;
  rect.extent1 = std::max(best.extent1, degenerate_extent);
  rect.extent2 = std::max(best.extent2, degenerate_extent);
  rect.angle = best.angle;
  return rect;
}

std::array<Vec3, 8> cuboid_corners(const Cuboid& c) {
  const double ct = std::cos(c.theta), st = std::sin(c.theta);
  const double hl = 0.5 * c.l, hw = 0.5 * c.w, hh = 0.5 * c.h;
  // In-ring offsets along (heading, cross) — counterclockwise in BEV.
  const double du[4] = {hl, -hl, -hl, hl};
  const double dv[4] = {hw, hw, -hw, -hw};
  std::array<Vec3, 8> out;
  for (int ring = 0; ring < 2; ++ring) {
    const double z = c.z + (ring == 0 ? -hh : hh);
    for (int i = 0; i < 4; ++i) {
      out[ring * 4 + i] = Vec3(c.x + du[i] * ct - dv[i] * st,
                               c.y + du[i] * st + dv[i] * ct, z);
    }
  }
  return out;
}

std::array<Vec2, 4> cuboid_bev_corners(const Cuboid& c) {
  const auto corners = cuboid_corners(c);
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = corners[i].head<2>();
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * acc;
}

std::vector<Vec2> convex_intersect(const std::vector<Vec2>& subject,
                                   const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto side = [&](const Vec2& p) {
      return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x());
    };
    std::vector<Vec2> in;
    in.swap(out);
    for (size_t j = 0; j < in.size(); ++j) {
      const Vec2& p = in[j];
      const Vec2& q = in[(j + 1) % in.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0) out.push_back(p);
      if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double bev_iou(const Cuboid& a, const Cuboid& b) {
  const auto ca = cuboid_bev_corners(a);
  const auto cb = cuboid_bev_corners(b);
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  double inter = polygon_area(convex_intersect(pa, pb));
  if (inter < kAreaFloor) inter = 0.0;
  const double area_a = a.w * a.l;
  const double area_b = b.w * b.l;
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<Projection> project_point(const CameraModel& cam,
                                        const Vec3& ego_point) {
  const Vec3 pc = cam.extrinsic.apply(ego_point);
  if (pc.z() <= 0.0) return std::nullopt;
  Projection pr;
  pr.u = cam.fx * pc.x() / pc.z() + cam.cx;
  pr.v = cam.fy * pc.y() / pc.z() + cam.cy;
  pr.depth = pc.z();
  if (pr.u < 0.0 || pr.u >= cam.width || pr.v < 0.0 || pr.v >= cam.height)
    return std::nullopt;
  return pr;
}

}  // namespace mine3d::geom
