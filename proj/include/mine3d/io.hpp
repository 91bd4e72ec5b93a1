#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mine3d/frustum.hpp"
#include "mine3d/geom.hpp"
#include "mine3d/hdmap.hpp"

namespace mine3d::io {

namespace fs = std::filesystem;

// One mined or ground-truth label line: frame id, class name, map-frame
// cuboid, confidence, don't-care flag.
struct LabelRecord {
  std::string frame_id;
  std::string class_name;
  double x = 0, y = 0, z = 0;
  double w = 0, l = 0, h = 0;
  double theta = 0;
  double confidence = 0;
  bool dont_care = false;
};

// Point cloud file: "LDR1", u32 count, count x 3 little-endian f32 (x,y,z).
geom::PointCloud read_point_cloud(const fs::path& path);
void write_point_cloud(const fs::path& path, const geom::PointCloud& cloud);

// Mask file: "MASK", u32 count; per instance u8 camera_id, u8 class_id,
// f32 confidence, u32 width, u32 height, ceil(w*h/8) bytes of row-major
// bit-packed bitmap (LSB first within each byte).
std::vector<frustum::InstanceMask> read_masks(const fs::path& path);
void write_masks(const fs::path& path,
                 const std::vector<frustum::InstanceMask>& masks);

// Raster file: "RSTR", u32 rows, u32 cols, f64 origin_x, f64 origin_y,
// f64 resolution, rows*cols little-endian f32 row-major (row 0 at origin_y).
hdmap::Raster read_raster(const fs::path& path);
void write_raster(const fs::path& path, const hdmap::Raster& raster);

// Lane graph: JSON list of lanes, each a list of [x, y, z] triples.
hdmap::LaneGraph read_lane_graph(const fs::path& path);
void write_lane_graph(const fs::path& path, const hdmap::LaneGraph& lanes);

// Pose JSON: {"rotation": [[...],[...],[...]], "translation": [x,y,z]}.
// Rejects non-rigid rotations.
geom::Pose read_pose(const fs::path& path);
void write_pose(const fs::path& path, const geom::Pose& pose);

// Camera list JSON keyed by camera_id.
std::map<int, geom::CameraModel> read_cameras(const fs::path& path);
void write_cameras(const fs::path& path,
                   const std::map<int, geom::CameraModel>& cams);

// JSON-lines labels, one record per line.
std::vector<LabelRecord> read_labels(const fs::path& path);
void write_labels(const fs::path& path,
                  const std::vector<LabelRecord>& records);

// Writes bytes via a temp file in the same directory, then renames.
void write_file_atomic(const fs::path& path, const std::string& bytes);

}  // namespace mine3d::io
