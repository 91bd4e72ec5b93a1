#include "mine3d/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mine3d/errors.hpp"

namespace mine3d::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Little-endian cursor over a byte buffer.
class Reader {
 public:
  Reader(const std::string& buf, const fs::path& path)
      : buf_(buf), path_(path) {}

  void expect_magic(const char* magic) {
    if (buf_.size() < pos_ + 4 || std::memcmp(buf_.data() + pos_, magic, 4) != 0)
      throw IoError(path_.string() + ": bad magic, expected '" +
                    std::string(magic) + "'");
    pos_ += 4;
  }
  uint8_t u8() { return take<uint8_t>(); }
  uint32_t u32() { return take<uint32_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }
  void bytes(void* dst, size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  void expect_end() const {
    if (pos_ != buf_.size())
      throw IoError(path_.string() + ": trailing bytes");
  }

 private:
  template <typename T>
  T take() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(size_t n) const {
    if (buf_.size() < pos_ + n)
      throw IoError(path_.string() + ": truncated file");
  }
  const std::string& buf_;
  fs::path path_;
  size_t pos_ = 0;
};

class Writer {
 public:
  void magic(const char* m) { buf_.append(m, 4); }
  void u8(uint8_t v) { put(v); }
  void u32(uint32_t v) { put(v); }
  void f32(float v) { put(v); }
  void f64(double v) { put(v); }
  void bytes(const void* src, size_t n) {
    buf_.append(static_cast<const char*>(src), n);
  }
  const std::string& str() const { return buf_; }

 private:
  template <typename T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.append(raw, sizeof(T));
  }
  std::string buf_;
};

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ordered_json pose_to_json(const geom::Pose& pose) {
  ordered_json j;
  j["rotation"] = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    j["rotation"].push_back(
        {pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  j["translation"] = {pose.translation.x(), pose.translation.y(),
                      pose.translation.z()};
  return j;
}

geom::Pose pose_from_json(const json& j, const fs::path& path) {
  geom::Pose pose;
  try {
    const auto& rot = j.at("rotation");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot.at(r).at(c);
    const auto& t = j.at("translation");
    for (int i = 0; i < 3; ++i) pose.translation(i) = t.at(i);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!pose.is_rigid())
    throw IoError(path.string() + ": rotation is not rigid");
  return pose;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

geom::PointCloud read_point_cloud(const fs::path& path) {
  const std::string buf = read_file(path);
  Reader r(buf, path);
  r.expect_magic("LDR1");
  const uint32_t count = r.u32();
  geom::PointCloud cloud;
  cloud.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const float x = r.f32(), y = r.f32(), z = r.f32();
    cloud.emplace_back(x, y, z);
  }
  r.expect_end();
  return cloud;
}

void write_point_cloud(const fs::path& path, const geom::PointCloud& cloud) {
  Writer w;
  w.magic("LDR1");
  w.u32(static_cast<uint32_t>(cloud.size()));
  for (const geom::Vec3& p : cloud) {
    w.f32(static_cast<float>(p.x()));
    w.f32(static_cast<float>(p.y()));
    w.f32(static_cast<float>(p.z()));
  }
  write_file_atomic(path, w.str());
}

std::vector<frustum::InstanceMask> read_masks(const fs::path& path) {
  const std::string buf = read_file(path);
  Reader r(buf, path);
  r.expect_magic("MASK");
  const uint32_t count = r.u32();
  std::vector<frustum::InstanceMask> masks;
  masks.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    frustum::InstanceMask m;
    m.camera_id = r.u8();
    m.class_id = r.u8();
    m.confidence = r.f32();
    m.width = static_cast<int>(r.u32());
    m.height = static_cast<int>(r.u32());
    const size_t nbytes =
        (static_cast<size_t>(m.width) * m.height + 7) / 8;
    m.bits.resize(nbytes);
    r.bytes(m.bits.data(), nbytes);
    masks.push_back(std::move(m));
  }
  r.expect_end();
  return masks;
}

void write_masks(const fs::path& path,
                 const std::vector<frustum::InstanceMask>& masks) {
  Writer w;
  w.magic("MASK");
  w.u32(static_cast<uint32_t>(masks.size()));
  for (const frustum::InstanceMask& m : masks) {
    w.u8(static_cast<uint8_t>(m.camera_id));
    w.u8(static_cast<uint8_t>(m.class_id));
    w.f32(m.confidence);
    w.u32(static_cast<uint32_t>(m.width));
    w.u32(static_cast<uint32_t>(m.height));
    w.bytes(m.bits.data(), m.bits.size());
  }
  write_file_atomic(path, w.str());
}

hdmap::Raster read_raster(const fs::path& path) {
  const std::string buf = read_file(path);
  Reader r(buf, path);
  r.expect_magic("RSTR");
  hdmap::Raster raster;
  raster.rows = static_cast<int>(r.u32());
  raster.cols = static_cast<int>(r.u32());
  raster.origin.x() = r.f64();
  raster.origin.y() = r.f64();
  raster.resolution = r.f64();
  if (raster.resolution <= 0)
    throw IoError(path.string() + ": non-positive resolution");
  raster.values.resize(static_cast<size_t>(raster.rows) * raster.cols);
  for (float& v : raster.values) v = r.f32();
  r.expect_end();
  return raster;
}

void write_raster(const fs::path& path, const hdmap::Raster& raster) {
  Writer w;
  w.magic("RSTR");
  w.u32(static_cast<uint32_t>(raster.rows));
  w.u32(static_cast<uint32_t>(raster.cols));
  w.f64(raster.origin.x());
  w.f64(raster.origin.y());
  w.f64(raster.resolution);
  for (float v : raster.values) w.f32(v);
  write_file_atomic(path, w.str());
}

hdmap::LaneGraph read_lane_graph(const fs::path& path) {
  const json j = parse_json(path);
  hdmap::LaneGraph g;
  try {
    for (const auto& lane : j) {
      std::vector<geom::Vec3> pts;
      pts.reserve(lane.size());
      for (const auto& p : lane)
        pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                         p.at(2).get<double>());
      g.lanes.push_back(std::move(pts));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  try {
    hdmap::validate(g);
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return g;
}

void write_lane_graph(const fs::path& path, const hdmap::LaneGraph& lanes) {
  ordered_json j = ordered_json::array();
  for (const auto& lane : lanes.lanes) {
    ordered_json jl = ordered_json::array();
    for (const geom::Vec3& p : lane) jl.push_back({p.x(), p.y(), p.z()});
    j.push_back(std::move(jl));
  }
  write_file_atomic(path, j.dump());
}

geom::Pose read_pose(const fs::path& path) {
  return pose_from_json(parse_json(path), path);
}

void write_pose(const fs::path& path, const geom::Pose& pose) {
  write_file_atomic(path, pose_to_json(pose).dump());
}

std::map<int, geom::CameraModel> read_cameras(const fs::path& path) {
  const json j = parse_json(path);
  std::map<int, geom::CameraModel> cams;
  try {
    for (const auto& jc : j) {
      geom::CameraModel cam;
      const int id = jc.at("camera_id");
      cam.fx = jc.at("fx");
      cam.fy = jc.at("fy");
      cam.cx = jc.at("cx");
      cam.cy = jc.at("cy");
      cam.width = jc.at("width");
      cam.height = jc.at("height");
      cam.extrinsic = pose_from_json(jc.at("extrinsic"), path);
      if (cam.fx <= 0 || cam.fy <= 0 || cam.width <= 0 || cam.height <= 0)
        throw IoError(path.string() + ": invalid intrinsics for camera " +
                      std::to_string(id));
      cams[id] = cam;
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return cams;
}

void write_cameras(const fs::path& path,
                   const std::map<int, geom::CameraModel>& cams) {
  ordered_json j = ordered_json::array();
  for (const auto& [id, cam] : cams) {
    ordered_json jc;
    jc["camera_id"] = id;
    jc["fx"] = cam.fx;
    jc["fy"] = cam.fy;
    jc["cx"] = cam.cx;
    jc["cy"] = cam.cy;
    jc["width"] = cam.width;
    jc["height"] = cam.height;
    jc["extrinsic"] = pose_to_json(cam.extrinsic);
    j.push_back(std::move(jc));
  }
  write_file_atomic(path, j.dump());
}

std::vector<LabelRecord> read_labels(const fs::path& path) {
  const std::string buf = read_file(path);
  std::vector<LabelRecord> out;
  std::istringstream ss(buf);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      LabelRecord rec;
      rec.frame_id = j.at("frame_id");
      rec.class_name = j.at("class");
      rec.x = j.at("x");
      rec.y = j.at("y");
      rec.z = j.at("z");
      rec.w = j.at("w");
      rec.l = j.at("l");
      rec.h = j.at("h");
      rec.theta = j.at("theta");
      rec.confidence = j.at("confidence");
      rec.dont_care = j.at("dont_care");
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " +
                    e.what());
    }
  }
  return out;
}

void write_labels(const fs::path& path,
                  const std::vector<LabelRecord>& records) {
  std::string buf;
  for (const LabelRecord& rec : records) {
    ordered_json j;
    j["frame_id"] = rec.frame_id;
    j["class"] = rec.class_name;
    j["x"] = rec.x;
    j["y"] = rec.y;
    j["z"] = rec.z;
    j["w"] = rec.w;
    j["l"] = rec.l;
    j["h"] = rec.h;
    j["theta"] = rec.theta;
    j["confidence"] = rec.confidence;
    j["dont_care"] = rec.dont_care;
    buf += j.dump();
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

}  // namespace mine3d::io
