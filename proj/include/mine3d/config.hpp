#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mine3d {

enum class OrientationMode { kMap, kCalipers };

// Per-class mining knobs: clip half-extents around the seed (heading axis,
// cross axis, height above ground), amodal target extents per axis,
// confidence threshold for the don't-care policy, and evaluation range.
struct ClassParams {
  std::string name;
  std::array<double, 3> clip{3.0, 1.5, 2.5};
  std::array<double, 3> prior{4.7, 1.9, 1.7};
  double conf_threshold = 0.7;
  double eval_range = 50.0;
  OrientationMode orientation = OrientationMode::kMap;
};

struct EvalConfig {
  std::vector<double> distance_thresholds{0.5, 1.0, 2.0, 4.0};
  double min_recall = 0.1;
  double min_precision = 0.1;
  double tp_error_threshold = 2.0;  // matching radius for ATE/ASE/AOE
};

// Run configuration with full defaulting. Target classes are indexed by
// position; mask class ids resolve through raw_class_names + class_map.
struct RunConfig {
  std::vector<ClassParams> classes;
  std::map<int, std::string> raw_class_names;       // mask id -> 2D label
  std::map<std::string, std::string> class_map;     // 2D label -> target
  double nms_iou = 0.3;
  double roi_margin = 5.0;
  double ground_eps = 0.3;
  double max_lane_dist = 10.0;
  int min_points = 5;
  int jobs = 1;
  std::optional<OrientationMode> orientation_override;
  EvalConfig eval;

  static RunConfig defaults();

  // Target class index for a mask class id; empty when unmapped.
  std::optional<int> target_of_raw(int raw_id) const;
  // Index of a target class by name; -1 when unknown.
  int class_index(const std::string& name) const;
};

// Loads a JSON config; absent keys keep their defaults. Throws IoError.
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical serialization (stable key order) and its FNV-1a hash.
std::string config_to_json(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

const char* orientation_mode_name(OrientationMode m);
OrientationMode orientation_mode_from_name(const std::string& name);

}  // namespace mine3d
