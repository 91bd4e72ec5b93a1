#pragma once

#include <memory>
#include <vector>

#include "mine3d/geom.hpp"

namespace mine3d::hdmap {

using geom::Vec2;
using geom::Vec3;

// Regular 2D grid in the map frame. `origin` is the lower-left corner of
// cell (row 0, col 0); values are row-major with row 0 at origin.y.
struct Raster {
  Vec2 origin = Vec2::Zero();
  double resolution = 1.0;  // meters per cell, > 0
  int rows = 0, cols = 0;
  std::vector<float> values;

  float at(int r, int c) const { return values[r * cols + c]; }
  float& at(int r, int c) { return values[r * cols + c]; }
  bool contains(const Vec2& p) const {
    return p.x() >= origin.x() && p.y() >= origin.y() &&
           p.x() < origin.x() + cols * resolution &&
           p.y() < origin.y() + rows * resolution;
  }
  Vec2 cell_center(int r, int c) const {
    return origin + Vec2((c + 0.5) * resolution, (r + 0.5) * resolution);
  }
};

// Bilinear interpolation between the four surrounding cell centers, with
// flat extension in the half-cell border strip. Throws OutOfMap when p is
// outside the raster bounds.
double ground_height_at(const Raster& h, const Vec2& p);

// Precomputed distance field over a driveable-area raster: per cell, the
// Euclidean distance from the cell center to the nearest driveable cell
// center (exact two-pass transform).
class DistanceField {
 public:
  explicit DistanceField(Raster drive);

  // True iff p falls on a cell whose distance to the road is <= margin.
  // Points outside the raster bounds are never in the ROI.
  bool in_roi(const Vec2& p, double margin) const;

  const Raster& raster() const { return drive_; }

 private:
  Raster drive_;
  std::vector<double> dist_;  // meters, per cell
};

// Lane centerlines: each lane is an ordered 3D polyline in the map frame,
// digitized along the direction of travel.
struct LaneGraph {
  std::vector<std::vector<Vec3>> lanes;
};

// Polyline validity: >= 2 points per lane, consecutive points > 1e-6 apart.
void validate(const LaneGraph& g);

struct LaneTangent {
  Vec2 direction = Vec2::UnitX();  // unit tangent, polyline point order
  double distance = 0;             // BEV distance from the query point
};

// Nearest-segment queries over a lane graph, accelerated by a uniform grid
// of segment bounding boxes. Exact: every cell within the current best
// radius is inspected. Immutable after construction; queries are
// concurrency-safe.
class LaneIndex {
 public:
  explicit LaneIndex(const LaneGraph& g, double cell_size = 10.0);

  // Closest point over all polyline segments in BEV; ties broken by lowest
  // (lane index, segment index). Throws EmptyMap when no segments exist.
  LaneTangent nearest_tangent(const Vec2& p) const;

  size_t segment_count() const { return segments_.size(); }

 private:
  struct Segment {
    Vec2 a, b;
    int lane = 0, seg = 0;
  };
  std::vector<Segment> segments_;
  double cell_size_ = 10.0;
  Vec2 grid_origin_ = Vec2::Zero();
  int grid_cols_ = 0, grid_rows_ = 0;
  std::vector<int> cell_start_;  // CSR over cells
  std::vector<int> cell_items_;

  int cell_index(int cx, int cy) const { return cy * grid_cols_ + cx; }
};

// Convenience wrapper for one-shot queries (builds a throwaway index).
LaneTangent nearest_lane_tangent(const LaneGraph& g, const Vec2& p);

// Immutable map bundle: lanes plus ground-height and driveable-area rasters,
// with the query structures built once at construction.
class HdMap {
 public:
  HdMap(LaneGraph lanes, Raster ground, Raster drive);

  const LaneGraph& lanes() const { return lanes_; }
  const Raster& ground() const { return ground_; }
  const DistanceField& drive() const { return drive_; }
  const LaneIndex& lane_index() const { return lane_index_; }

  // Ground height with a caller-provided fallback for off-raster queries.
  double ground_height_or(const Vec2& p, double fallback) const;

 private:
  LaneGraph lanes_;
  Raster ground_;
  DistanceField drive_;
  LaneIndex lane_index_;
};

}  // namespace mine3d::hdmap
