#include "mine3d/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mine3d/errors.hpp"
#include "mine3d/inflate.hpp"
#include "mine3d/io.hpp"
#include "mine3d/metrics.hpp"
#include "mine3d/synth.hpp"

namespace mine3d::cli {

namespace {

using nlohmann::ordered_json;

RunConfig load_config_or_defaults(const fs::path& path) {
  if (path.empty()) return RunConfig::defaults();
  return load_run_config(path);
}

hdmap::HdMap load_map(const fs::path& dataset_dir) {
  const fs::path map_dir = dataset_dir / "map";
  return hdmap::HdMap(io::read_lane_graph(map_dir / "lanes.json"),
                      io::read_raster(map_dir / "ground.rstr"),
                      io::read_raster(map_dir / "drive.rstr"));
}

inflate::Frame load_frame(const fs::path& frame_dir) {
  inflate::Frame frame;
  frame.frame_id = frame_dir.filename().string();
  frame.cloud_ego = io::read_point_cloud(frame_dir / "points.ldr");
  frame.masks = io::read_masks(frame_dir / "masks.msk");
  frame.ego_pose = io::read_pose(frame_dir / "ego_pose.json");
  frame.cameras = io::read_cameras(frame_dir / "cameras.json");
  for (const auto& mask : frame.masks) {
    const auto it = frame.cameras.find(mask.camera_id);
    if (it == frame.cameras.end())
      throw IoError((frame_dir / "masks.msk").string() +
                    ": mask references unknown camera id " +
                    std::to_string(mask.camera_id));
    if (mask.width != it->second.width || mask.height != it->second.height)
      throw IoError((frame_dir / "masks.msk").string() +
                    ": mask bitmap does not match camera " +
                    std::to_string(mask.camera_id) + " dimensions");
  }
  return frame;
}

std::vector<fs::path> sorted_frame_dirs(const fs::path& frames_dir) {
  std::vector<fs::path> dirs;
  if (fs::exists(frames_dir))
    for (const auto& entry : fs::directory_iterator(frames_dir))
      if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

int classify_exit(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}

std::vector<io::LabelRecord> to_labels(
    const std::vector<inflate::MinedCuboid>& mined, const RunConfig& cfg,
    const std::string& frame_id) {
  std::vector<io::LabelRecord> out;
  out.reserve(mined.size());
  for (const inflate::MinedCuboid& m : mined) {
    io::LabelRecord rec;
    rec.frame_id = frame_id;
    rec.class_name = cfg.classes[m.class_id].name;
    rec.x = m.cuboid.x;
    rec.y = m.cuboid.y;
    rec.z = m.cuboid.z;
    rec.w = m.cuboid.w;
    rec.l = m.cuboid.l;
    rec.h = m.cuboid.h;
    rec.theta = m.cuboid.theta;
    rec.confidence = m.confidence;
    rec.dont_care = m.dont_care;
    out.push_back(std::move(rec));
  }
  return out;
}

metrics::Box to_box(const io::LabelRecord& rec, int class_id) {
  metrics::Box box;
  box.cuboid = {rec.x, rec.y, rec.z, rec.w, rec.l, rec.h, rec.theta};
  box.class_id = class_id;
  box.confidence = rec.confidence;
  box.dont_care = rec.dont_care;
  return box;
}

}  // namespace

int cmd_mine(const MineOptions& opts) {
  try {
    RunConfig cfg = load_config_or_defaults(opts.config_path);
    if (opts.jobs) cfg.jobs = *opts.jobs;
    if (opts.orientation) cfg.orientation_override = opts.orientation;

    if (!fs::exists(opts.dataset_dir))
      throw IoError("dataset directory " + opts.dataset_dir.string() +
                    " does not exist");
    const hdmap::HdMap map = load_map(opts.dataset_dir);
    const std::vector<fs::path> frame_dirs =
        sorted_frame_dirs(opts.dataset_dir / "frames");
    fs::create_directories(opts.out_dir);

    std::vector<std::vector<inflate::MinedCuboid>> results(frame_dirs.size());
    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= frame_dirs.size()) return;
        try {
          const inflate::Frame frame = load_frame(frame_dirs[i]);
          results[i] = inflate::mine_frame(frame, map, cfg);
          io::write_labels(
              opts.out_dir / (frame.frame_id + ".jsonl"),
              to_labels(results[i], cfg, frame.frame_id));
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || frame_dirs.size() <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      const int n = std::min<int>(jobs, static_cast<int>(frame_dirs.size()));
      for (int t = 0; t < n; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    if (first_error) return classify_exit(first_error);

    // Manifest, accumulated in frame order so workers cannot affect it.
    std::map<std::string, int> per_class;
    for (const ClassParams& p : cfg.classes) per_class[p.name] = 0;
    size_t total = 0, dont_care = 0;
    for (const auto& mined : results) {
      for (const inflate::MinedCuboid& m : mined) {
        ++per_class[cfg.classes[m.class_id].name];
        ++total;
        if (m.dont_care) ++dont_care;
      }
    }
    ordered_json manifest;
    manifest["config_hash"] = hash_hex(config_hash(cfg));
    manifest["frames"] = frame_dirs.size();
    manifest["labels_total"] = total;
    manifest["labels_per_class"] = per_class;
    manifest["dont_care_total"] = dont_care;
    manifest["config"] = ordered_json::parse(config_to_json(cfg));
    io::write_file_atomic(opts.out_dir / "manifest.json", manifest.dump(2));
    return kExitOk;
  } catch (...) {
    return classify_exit(std::current_exception());
  }
}

int cmd_eval(const EvalOptions& opts) {
  try {
    const RunConfig cfg = load_config_or_defaults(opts.config_path);

    auto list_label_files = [](const fs::path& dir) {
      std::map<std::string, fs::path> out;
      if (!fs::exists(dir))
        throw IoError("label directory " + dir.string() + " does not exist");
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".jsonl")
          out[entry.path().stem().string()] = entry.path();
      return out;
    };
    const auto pred_files = list_label_files(opts.pred_dir);
    const auto gt_files = list_label_files(opts.gt_dir);

    // Predictions for unknown frames are a hard mismatch; ground-truth
    // frames without a prediction file count as zero predictions.
    std::vector<std::string> stray;
    for (const auto& [frame_id, path] : pred_files)
      if (!gt_files.count(frame_id)) stray.push_back(frame_id);
    if (!stray.empty()) {
      std::string msg = "prediction frames without ground truth:";
      for (const std::string& s : stray) msg += " " + s;
      throw IoError(msg);
    }

    std::vector<metrics::FrameEval> frames;
    for (const auto& [frame_id, gt_path] : gt_files) {
      metrics::FrameEval fe;
      if (!opts.dataset_dir.empty()) {
        fe.ego = io::read_pose(opts.dataset_dir / "frames" / frame_id /
                               "ego_pose.json");
      }
      auto convert = [&](const fs::path& path) {
        std::vector<metrics::Box> out;
        for (const io::LabelRecord& rec : io::read_labels(path)) {
          const int cid = cfg.class_index(rec.class_name);
          if (cid < 0)
            throw IoError(path.string() + ": unknown class '" +
                          rec.class_name + "'");
          out.push_back(to_box(rec, cid));
        }
        return out;
      };
      fe.gts = convert(gt_path);
      const auto pit = pred_files.find(frame_id);
      if (pit != pred_files.end()) fe.preds = convert(pit->second);
      frames.push_back(std::move(fe));
    }

    const metrics::EvalReport report =
        metrics::evaluate(frames, cfg.classes, cfg.eval);

    fs::create_directories(opts.out_dir);
    ordered_json j;
    char buf[64];
    j["mAP"] = report.map;
    j["mATE"] = report.mate;
    j["mASE"] = report.mase;
    j["mAOE"] = report.maoe;
    j["thresholds"] = cfg.eval.distance_thresholds;
    ordered_json jclasses;
    for (const metrics::ClassMetrics& cm : report.classes) {
      ordered_json jc;
      jc["evaluated"] = cm.evaluated;
      ordered_json japs;
      for (const auto& [thr, ap] : cm.ap) {
        std::snprintf(buf, sizeof(buf), "%.2f", thr);
        japs[buf] = ap;
      }
      jc["ap"] = std::move(japs);
      jc["mean_ap"] = cm.mean_ap;
      jc["ate"] = cm.ate;
      jc["ase"] = cm.ase;
      jc["aoe"] = cm.aoe;
      jc["tp"] = cm.tp;
      jc["fp"] = cm.fp;
      jc["fn"] = cm.fn;
      jclasses[cm.name] = std::move(jc);
    }
    j["classes"] = std::move(jclasses);
    io::write_file_atomic(opts.out_dir / "report.json", j.dump(2));

    std::string csv = "name,mAP,mATE,mASE,mAOE\n";
    auto row = [&](const std::string& name, double m, double a, double s,
                   double o) {
      std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f\n", name.c_str(),
                    m, a, s, o);
      csv += buf;
    };
    for (const metrics::ClassMetrics& cm : report.classes)
      if (cm.evaluated) row(cm.name, cm.mean_ap, cm.ate, cm.ase, cm.aoe);
    row("overall", report.map, report.mate, report.mase, report.maoe);
    io::write_file_atomic(opts.out_dir / "report.csv", csv);

    std::snprintf(buf, sizeof(buf), "mAP %.4f mATE %.4f mASE %.4f mAOE %.4f",
                  report.map, report.mate, report.mase, report.maoe);
    std::cout << buf << "\n";
    return kExitOk;
  } catch (...) {
    return classify_exit(std::current_exception());
  }
}

int cmd_synth(const SynthOptions& opts) {
  try {
    synth::SceneSpec spec;
    if (!opts.spec_path.empty()) spec = synth::load_scene_spec(opts.spec_path);
    if (opts.seed) spec.seed = *opts.seed;
    synth::write_dataset(spec, opts.out_dir);
    io::write_file_atomic(opts.out_dir / "spec.json",
                          synth::scene_spec_to_json(spec));
    std::cout << "wrote " << spec.frames << " frame(s) to "
              << opts.out_dir.string() << "\n";
    return kExitOk;
  } catch (const PlacementFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (...) {
    return classify_exit(std::current_exception());
  }
}

}  // namespace mine3d::cli
