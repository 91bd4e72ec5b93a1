#include "mine3d/hdmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mine3d/errors.hpp"

namespace mine3d::hdmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Finite background cost for the distance transform; infinities would turn
// the parabola intersections into NaNs.
constexpr double kFar = 1e20;

// 1D squared distance transform (Felzenszwalb & Huttenlocher).
void dt_1d(const std::vector<double>& f, std::vector<double>& d,
           std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

double point_segment_dist_sq(const Vec2& p, const Vec2& a, const Vec2& b,
                             Vec2* closest) {
  const Vec2 ab = b - a;
  const double len_sq = ab.squaredNorm();
  double t = len_sq > 0.0 ? (p - a).dot(ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + t * ab;
  if (closest) *closest = q;
  return (p - q).squaredNorm();
}

double point_rect_dist(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  const double dx = std::max({lo.x() - p.x(), 0.0, p.x() - hi.x()});
  const double dy = std::max({lo.y() - p.y(), 0.0, p.y() - hi.y()});
  return std::hypot(dx, dy);
}

}  // namespace

double ground_height_at(const Raster& h, const Vec2& p) {
  if (!h.contains(p))
    throw OutOfMap("ground_height_at: point (" + std::to_string(p.x()) +
                   ", " + std::to_string(p.y()) + ") outside raster");
  // Continuous cell-center coordinates; clamp to the center lattice so the
  // half-cell border strip extends flat.
  const double gx = (p.x() - h.origin.x()) / h.resolution - 0.5;
  const double gy = (p.y() - h.origin.y()) / h.resolution - 0.5;
  int c0 = 0, r0 = 0;
  double tx = 0.0, ty = 0.0;
  if (h.cols > 1) {
    c0 = std::clamp(static_cast<int>(std::floor(gx)), 0, h.cols - 2);
    tx = std::clamp(gx - c0, 0.0, 1.0);
  }
  if (h.rows > 1) {
    r0 = std::clamp(static_cast<int>(std::floor(gy)), 0, h.rows - 2);
    ty = std::clamp(gy - r0, 0.0, 1.0);
  }
  const int c1 = std::min(c0 + 1, h.cols - 1);
  const int r1 = std::min(r0 + 1, h.rows - 1);
  const double v00 = h.at(r0, c0), v01 = h.at(r0, c1);
  const double v10 = h.at(r1, c0), v11 = h.at(r1, c1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v01) +
         ty * ((1 - tx) * v10 + tx * v11);
}

DistanceField::DistanceField(Raster drive) : drive_(std::move(drive)) {
  const int rows = drive_.rows, cols = drive_.cols;
  dist_.assign(static_cast<size_t>(rows) * cols, kInf);
  if (rows == 0 || cols == 0) return;

  // Squared EDT in cell units: columns, then rows.
  std::vector<double> grid(static_cast<size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      grid[r * cols + c] = drive_.at(r, c) > 0.5f ? 0.0 : kFar;

  const int m = std::max(rows, cols);
  std::vector<double> f(m), d(m), z(m + 1);
  std::vector<int> v(m);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) f[r] = grid[r * cols + c];
    f.resize(rows);
    d.resize(rows);
    dt_1d(f, d, v, z);
    for (int r = 0; r < rows; ++r) grid[r * cols + c] = d[r];
    f.resize(m);
    d.resize(m);
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) f[c] = grid[r * cols + c];
    f.resize(cols);
    d.resize(cols);
    dt_1d(f, d, v, z);
    for (int c = 0; c < cols; ++c)
      dist_[r * cols + c] = std::sqrt(d[c]) * drive_.resolution;
    f.resize(m);
    d.resize(m);
  }
}

bool DistanceField::in_roi(const Vec2& p, double margin) const {
  if (!drive_.contains(p)) return false;
  const int c = static_cast<int>((p.x() - drive_.origin.x()) /
                                 drive_.resolution);
  const int r = static_cast<int>((p.y() - drive_.origin.y()) /
                                 drive_.resolution);
  return dist_[r * drive_.cols + c] <= margin;
}

void validate(const LaneGraph& g) {
  for (size_t i = 0; i < g.lanes.size(); ++i) {
    const auto& lane = g.lanes[i];
    if (lane.size() < 2)
      throw Error("lane " + std::to_string(i) + " has fewer than 2 points");
    for (size_t j = 1; j < lane.size(); ++j) {
      if ((lane[j] - lane[j - 1]).norm() <= 1e-6)
        throw Error("lane " + std::to_string(i) +
                    " has coincident consecutive points at index " +
                    std::to_string(j));
    }
  }
}

LaneIndex::LaneIndex(const LaneGraph& g, double cell_size)
    : cell_size_(cell_size) {
  Vec2 lo(kInf, kInf), hi(-kInf, -kInf);
  for (size_t li = 0; li < g.lanes.size(); ++li) {
    const auto& lane = g.lanes[li];
    for (size_t si = 0; si + 1 < lane.size(); ++si) {
      const Vec2 a = lane[si].head<2>();
      const Vec2 b = lane[si + 1].head<2>();
      if ((b - a).squaredNorm() < 1e-18) continue;  // vertical-only step
      segments_.push_back({a, b, static_cast<int>(li), static_cast<int>(si)});
      lo = lo.cwiseMin(a.cwiseMin(b));
      hi = hi.cwiseMax(a.cwiseMax(b));
    }
  }
  if (segments_.empty()) return;

  grid_origin_ = lo;
  grid_cols_ = std::max(
      1, static_cast<int>(std::floor((hi.x() - lo.x()) / cell_size_)) + 1);
  grid_rows_ = std::max(
      1, static_cast<int>(std::floor((hi.y() - lo.y()) / cell_size_)) + 1);

  // CSR fill: count, prefix-sum, scatter.
  std::vector<int> counts(static_cast<size_t>(grid_cols_) * grid_rows_, 0);
  auto cells_of = [&](const Segment& s, auto&& fn) {
    const int x0 = static_cast<int>((std::min(s.a.x(), s.b.x()) - lo.x()) /
                                    cell_size_);
    const int x1 = static_cast<int>((std::max(s.a.x(), s.b.x()) - lo.x()) /
                                    cell_size_);
    const int y0 = static_cast<int>((std::min(s.a.y(), s.b.y()) - lo.y()) /
                                    cell_size_);
    const int y1 = static_cast<int>((std::max(s.a.y(), s.b.y()) - lo.y()) /
                                    cell_size_);
    for (int cy = y0; cy <= std::min(y1, grid_rows_ - 1); ++cy)
      for (int cx = x0; cx <= std::min(x1, grid_cols_ - 1); ++cx)
        fn(cell_index(cx, cy));
  };
  for (const Segment& s : segments_)
    cells_of(s, [&](int ci) { ++counts[ci]; });
  cell_start_.assign(counts.size() + 1, 0);
  for (size_t i = 0; i < counts.size(); ++i)
    cell_start_[i + 1] = cell_start_[i] + counts[i];
  cell_items_.resize(cell_start_.back());
  std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (size_t si = 0; si < segments_.size(); ++si)
    cells_of(segments_[si],
             [&](int ci) { cell_items_[cursor[ci]++] = static_cast<int>(si); });
}

LaneTangent LaneIndex::nearest_tangent(const Vec2& p) const {
  if (segments_.empty()) throw EmptyMap();

  double best_d2 = kInf;
  int best_lane = -1, best_seg = -1;
  const Segment* best = nullptr;

  auto consider = [&](const Segment& s) {
    const double d2 = point_segment_dist_sq(p, s.a, s.b, nullptr);
    if (d2 < best_d2 || (d2 == best_d2 &&
                         (s.lane < best_lane ||
                          (s.lane == best_lane && s.seg < best_seg)))) {
      best_d2 = d2;
      best_lane = s.lane;
      best_seg = s.seg;
      best = &s;
    }
  };

  const int sx = std::clamp(
      static_cast<int>(std::floor((p.x() - grid_origin_.x()) / cell_size_)), 0,
      grid_cols_ - 1);
  const int sy = std::clamp(
      static_cast<int>(std::floor((p.y() - grid_origin_.y()) / cell_size_)), 0,
      grid_rows_ - 1);
  const int max_ring = std::max(grid_cols_, grid_rows_);

  for (int ring = 0; ring <= max_ring; ++ring) {
    double ring_min = kInf;
    bool any_cell = false;
    auto visit_cell = [&](int cx, int cy) {
      if (cx < 0 || cy < 0 || cx >= grid_cols_ || cy >= grid_rows_) return;
      any_cell = true;
      const Vec2 cell_lo = grid_origin_ + Vec2(cx * cell_size_, cy * cell_size_);
      const Vec2 cell_hi = cell_lo + Vec2(cell_size_, cell_size_);
      const double lb = point_rect_dist(p, cell_lo, cell_hi);
      ring_min = std::min(ring_min, lb);
      if (lb * lb > best_d2) return;
      const int ci = cell_index(cx, cy);
      for (int k = cell_start_[ci]; k < cell_start_[ci + 1]; ++k)
        consider(segments_[cell_items_[k]]);
    };
    if (ring == 0) {
      visit_cell(sx, sy);
    } else {
      for (int cx = sx - ring; cx <= sx + ring; ++cx) {
        visit_cell(cx, sy - ring);
        visit_cell(cx, sy + ring);
      }
      for (int cy = sy - ring + 1; cy <= sy + ring - 1; ++cy) {
        visit_cell(sx - ring, cy);
        visit_cell(sx + ring, cy);
      }
    }
    // Rings are nested annuli: their minimum possible distance is
    // non-decreasing, so once a ring cannot beat the best we are done.
    if (!any_cell && ring > 0 && best) break;
    if (best && ring_min * ring_min > best_d2) break;
  }

  LaneTangent out;
  out.direction = (best->b - best->a).normalized();
  out.distance = std::sqrt(best_d2);
  return out;
}

LaneTangent nearest_lane_tangent(const LaneGraph& g, const Vec2& p) {
  return LaneIndex(g).nearest_tangent(p);
}

HdMap::HdMap(LaneGraph lanes, Raster ground, Raster drive)
    : lanes_(std::move(lanes)),
      ground_(std::move(ground)),
      drive_(std::move(drive)),
      lane_index_(lanes_) {
  validate(lanes_);
}

double HdMap::ground_height_or(const Vec2& p, double fallback) const {
  if (!ground_.contains(p)) return fallback;
  return ground_height_at(ground_, p);
}

}  // namespace mine3d::hdmap
