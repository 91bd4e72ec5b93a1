#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mine3d/config.hpp"
#include "mine3d/frustum.hpp"
#include "mine3d/geom.hpp"
#include "mine3d/hdmap.hpp"
#include "mine3d/inflate.hpp"
#include "mine3d/io.hpp"

namespace mine3d::synth {

// Splittable counter-based generator: every draw mixes (key, counter)
// through a 64-bit finalizer, so streams keyed by entity are independent of
// generation order.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream);

  uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int n);  // [0, n)
  double normal(double sigma);

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

struct LaneLayout {
  int count = 4;           // alternating digitization direction (two-way)
  double length = 90.0;    // meters along the road
  double spacing = 3.5;    // lateral distance between centerlines
  double curvature = 0.0;  // parabolic bend coefficient (1/m)
  double sample_step = 2.0;
};

struct SensorSpec {
  int cameras = 6;  // evenly spaced ring
  int image_width = 640, image_height = 480;
  double fov_deg = 70.0;
  double points_per_m2 = 120.0;  // LiDAR surface density at close range
  double noise_sigma = 0.01;     // per-coordinate Gaussian, meters
  double lidar_height = 1.8;
  double camera_height = 1.6;
};

struct SceneSpec {
  uint64_t seed = 0;
  int frames = 1;
  std::map<std::string, int> objects = {
      {"vehicle", 4}, {"bus", 1}, {"bicycle", 1}, {"pedestrian", 2}};
  LaneLayout lanes;
  SensorSpec sensors;
  double occlusion_fraction = 0.0;   // per-point drop probability
  double heading_noise_sigma = 0.0;  // object yaw vs. lane tangent, radians
  double ground_slope = 0.0;         // ground height = slope * x
  double raster_resolution = 1.0;
  double conf_lo = 0.8, conf_hi = 1.0;  // mask confidence range
  double ground_points_per_m2 = 2.0;
  int clutter_points = 150;  // off-road points, outside the ROI
};

struct GtObject {
  geom::Cuboid cuboid;  // map frame
  std::string class_name;
  int raw_class_id = 0;  // 2D label id used for this object's masks
};

// One frame with full ground truth: per-point object ids and per-mask
// object ids make purity and AP exactly computable.
struct GroundTruthScene {
  uint64_t seed = 0;
  int frame_index = 0;
  hdmap::LaneGraph lanes;
  hdmap::Raster ground, drive;
  geom::Pose ego;              // map-from-ego; ego origin at ground level
  geom::PointCloud cloud_map;  // map frame
  std::vector<int> point_object;  // object index, -1 ground, -2 clutter
  std::vector<frustum::InstanceMask> masks;
  std::vector<int> mask_object;
  std::vector<GtObject> objects;
  std::map<int, geom::CameraModel> cameras;
};

// Deterministic scene for (spec.seed, frame_index). The map depends only on
// the spec, so frames of one spec share it. Throws PlacementFailed when an
// object cannot be placed without overlap.
GroundTruthScene generate_scene(const SceneSpec& spec, int frame_index = 0);

// Randomly drops masks and dilates the survivors (Chebyshev radius
// dilate_px), deterministically for the scene's seed.
void corrupt_masks(GroundTruthScene& scene, double drop_rate, int dilate_px);

// Frame view of a scene, with coordinates quantized through the on-disk
// f32 precision so in-process results match file-based runs.
inflate::Frame scene_to_frame(const GroundTruthScene& scene,
                              const std::string& frame_id);

// Ground-truth labels of a scene in the miner's output schema.
std::vector<io::LabelRecord> scene_gt_labels(const GroundTruthScene& scene,
                                             const std::string& frame_id);

SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);

// Writes map/, frames/NNNNNN/, and gt/NNNNNN.jsonl under out_dir.
void write_dataset(const SceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mine3d::synth
