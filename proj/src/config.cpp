#include "mine3d/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mine3d/errors.hpp"

namespace mine3d {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ClassParams make_class(const std::string& name, std::array<double, 3> clip,
                       std::array<double, 3> prior, double range,
                       OrientationMode mode) {
  ClassParams p;
  p.name = name;
  p.clip = clip;
  p.prior = prior;
  p.eval_range = range;
  p.orientation = mode;
  return p;
}

}  // namespace

const char* orientation_mode_name(OrientationMode m) {
  return m == OrientationMode::kMap ? "map" : "calipers";
}

OrientationMode orientation_mode_from_name(const std::string& name) {
  if (name == "map") return OrientationMode::kMap;
  if (name == "calipers") return OrientationMode::kCalipers;
  throw Error("unknown orientation mode '" + name + "'");
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.classes = {
      make_class("vehicle", {3.0, 1.5, 2.5}, {4.7, 1.9, 1.7}, 50.0,
                 OrientationMode::kMap),
      make_class("bus", {7.0, 2.0, 4.0}, {12.0, 2.9, 3.4}, 50.0,
                 OrientationMode::kMap),
      make_class("bicycle", {1.2, 0.8, 1.8}, {1.8, 0.7, 1.4}, 40.0,
                 OrientationMode::kMap),
      make_class("pedestrian", {0.6, 0.6, 2.2}, {0.7, 0.7, 1.8}, 40.0,
                 OrientationMode::kCalipers),
  };
  cfg.raw_class_names = {
      {0, "person"}, {1, "bicycle"}, {2, "car"}, {5, "bus"}, {7, "truck"}};
  cfg.class_map = {{"car", "vehicle"},
                   {"truck", "vehicle"},
                   {"bus", "bus"},
                   {"bicycle", "bicycle"},
                   {"person", "pedestrian"}};
  return cfg;
}

std::optional<int> RunConfig::target_of_raw(int raw_id) const {
  const auto raw_it = raw_class_names.find(raw_id);
  if (raw_it == raw_class_names.end()) return std::nullopt;
  const auto map_it = class_map.find(raw_it->second);
  if (map_it == class_map.end()) return std::nullopt;
  const int idx = class_index(map_it->second);
  if (idx < 0) return std::nullopt;
  return idx;
}

int RunConfig::class_index(const std::string& name) const {
  for (size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == name) return static_cast<int>(i);
  return -1;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }

  RunConfig cfg = RunConfig::defaults();
  try {
    if (j.contains("classes")) {
      cfg.classes.clear();
      for (const auto& jc : j["classes"]) {
        ClassParams p;
        p.name = jc.at("name");
        if (jc.contains("clip"))
          for (int i = 0; i < 3; ++i) p.clip[i] = jc["clip"].at(i);
        if (jc.contains("prior"))
          for (int i = 0; i < 3; ++i) p.prior[i] = jc["prior"].at(i);
        p.conf_threshold = jc.value("conf_threshold", p.conf_threshold);
        p.eval_range = jc.value("eval_range", p.eval_range);
        if (jc.contains("orientation"))
          p.orientation = orientation_mode_from_name(jc["orientation"]);
        cfg.classes.push_back(std::move(p));
      }
    }
    if (j.contains("raw_classes")) {
      cfg.raw_class_names.clear();
      for (const auto& [key, val] : j["raw_classes"].items())
        cfg.raw_class_names[std::stoi(key)] = val.get<std::string>();
    }
    if (j.contains("class_map")) {
      cfg.class_map.clear();
      for (const auto& [key, val] : j["class_map"].items())
        cfg.class_map[key] = val.get<std::string>();
    }
    cfg.nms_iou = j.value("nms_iou", cfg.nms_iou);
    cfg.roi_margin = j.value("roi_margin", cfg.roi_margin);
    cfg.ground_eps = j.value("ground_eps", cfg.ground_eps);
    cfg.max_lane_dist = j.value("max_lane_dist", cfg.max_lane_dist);
    cfg.min_points = j.value("min_points", cfg.min_points);
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("orientation_mode"))
      cfg.orientation_override =
          orientation_mode_from_name(j["orientation_mode"]);
    if (j.contains("eval")) {
      const auto& je = j["eval"];
      if (je.contains("distance_thresholds"))
        cfg.eval.distance_thresholds =
            je["distance_thresholds"].get<std::vector<double>>();
      cfg.eval.min_recall = je.value("min_recall", cfg.eval.min_recall);
      cfg.eval.min_precision =
          je.value("min_precision", cfg.eval.min_precision);
      cfg.eval.tp_error_threshold =
          je.value("tp_error_threshold", cfg.eval.tp_error_threshold);
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }

  for (const auto& [label, target] : cfg.class_map)
    if (cfg.class_index(target) < 0)
      throw IoError(path.string() + ": class_map target '" + target +
                    "' is not a configured class");
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["classes"] = ordered_json::array();
  for (const ClassParams& p : cfg.classes) {
    ordered_json jc;
    jc["name"] = p.name;
    jc["clip"] = p.clip;
    jc["prior"] = p.prior;
    jc["conf_threshold"] = p.conf_threshold;
    jc["eval_range"] = p.eval_range;
    jc["orientation"] = orientation_mode_name(p.orientation);
    j["classes"].push_back(std::move(jc));
  }
  ordered_json raw;
  for (const auto& [id, name] : cfg.raw_class_names)
    raw[std::to_string(id)] = name;
  j["raw_classes"] = std::move(raw);
  j["class_map"] = cfg.class_map;
  j["nms_iou"] = cfg.nms_iou;
  j["roi_margin"] = cfg.roi_margin;
  j["ground_eps"] = cfg.ground_eps;
  j["max_lane_dist"] = cfg.max_lane_dist;
  j["min_points"] = cfg.min_points;
  j["jobs"] = cfg.jobs;
  if (cfg.orientation_override)
    j["orientation_mode"] = orientation_mode_name(*cfg.orientation_override);
  ordered_json je;
  je["distance_thresholds"] = cfg.eval.distance_thresholds;
  je["min_recall"] = cfg.eval.min_recall;
  je["min_precision"] = cfg.eval.min_precision;
  je["tp_error_threshold"] = cfg.eval.tp_error_threshold;
  j["eval"] = std::move(je);
  return j.dump();
}

uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = config_to_json(cfg);
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mine3d
