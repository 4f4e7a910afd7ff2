#include "motrec/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace motrec {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

[[noreturn]] void fail_at(const std::string& path, int line,
                          const std::string& what) {
  throw std::runtime_error(path + " line " + std::to_string(line) + ": " +
                           what);
}

}  // namespace

double ViewpointBins::azimuth_angle(int bin) const {
  return (bin + 0.5) * (360.0 / azimuth_bins) * kDegToRad;
}

double ViewpointBins::elevation_angle(int bin) const {
  const double span = elevation_max_deg - elevation_min_deg;
  return (elevation_min_deg + (bin + 0.5) * span / elevation_bins) * kDegToRad;
}

Eigen::Vector3d back_project(const Detection& d, const CameraIntrinsics& k) {
  if (d.depth <= 0.0)
    throw std::invalid_argument("back_project: non-positive depth");
  const Eigen::Vector2d u = d.box2d.center() + d.offset;
  return {(u.x() - k.cx) / k.fx * d.depth, (u.y() - k.cy) / k.fy * d.depth,
          d.depth};
}

Eigen::Matrix3d decode_viewpoint(int azimuth_bin, int elevation_bin,
                                 const ViewpointBins& bins) {
  if (azimuth_bin < 0 || azimuth_bin >= bins.azimuth_bins)
    throw std::out_of_range("decode_viewpoint: azimuth bin out of range");
  if (elevation_bin < 0 || elevation_bin >= bins.elevation_bins)
    throw std::out_of_range("decode_viewpoint: elevation bin out of range");
  return rot_y(bins.elevation_angle(elevation_bin)) *
         rot_z(bins.azimuth_angle(azimuth_bin));
}

std::pair<int, int> nearest_bins(const Eigen::Matrix3d& r,
                                 const ViewpointBins& bins) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> out{0, 0};
  for (int e = 0; e < bins.elevation_bins; ++e) {
    for (int a = 0; a < bins.azimuth_bins; ++a) {
      const double d = (decode_viewpoint(a, e, bins) - r).norm();
      if (d < best) {
        best = d;
        out = {a, e};
      }
    }
  }
  return out;
}

OrientedBox3 to_box3(const Detection& d, const CameraIntrinsics& k,
                     const ViewpointBins& bins) {
  OrientedBox3 box;
  box.pose.rotation = decode_viewpoint(d.azimuth_bin, d.elevation_bin, bins);
  box.pose.translation = back_project(d, k);
  box.scale = d.scale;
  box.frame = Frame::kCamera;
  return box;
}

namespace {

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  CameraIntrinsics k;
  if (!(in >> k.fx >> k.fy >> k.cx >> k.cy))
    fail_at(path, 1, "expected 'fx fy cx cy'");
  if (k.fx <= 0.0 || k.fy <= 0.0)
    fail_at(path, 1, "focal lengths must be positive");
  return k;
}

std::map<int, Pose> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::map<int, Pose> out;
  std::string line;
  int line_no = 0;
  int prev_frame = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int frame;
    double tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> frame >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      fail_at(path, line_no, "expected 'frame tx ty tz qx qy qz qw'");
    if (frame <= prev_frame)
      fail_at(path, line_no, "frame ids must be strictly increasing");
    prev_frame = frame;
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (q.norm() < 1e-9) fail_at(path, line_no, "zero quaternion");
    q.normalize();
    Pose p;
    p.rotation = q.toRotationMatrix();
    p.translation = {tx, ty, tz};
    out.emplace(frame, p);
  }
  return out;
}

Detection parse_detection(const nlohmann::json& j, const std::string& path,
                          int line_no) {
  Detection d;
  try {
    d.frame_id = j.at("frame").get<int>();
    d.class_label = j.at("class").get<std::string>();
    d.score = j.at("score").get<double>();
    const auto& b = j.at("box2d");
    d.box2d = {b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()};
    const auto& o = j.at("offset");
    d.offset = {o.at(0).get<double>(), o.at(1).get<double>()};
    d.depth = j.at("depth").get<double>();
    d.azimuth_bin = j.at("azi_bin").get<int>();
    d.elevation_bin = j.at("ele_bin").get<int>();
    const auto& s = j.at("scale");
    d.scale = {s.at(0).get<double>(), s.at(1).get<double>(),
               s.at(2).get<double>()};
    if (j.contains("code")) {
      const auto& c = j.at("code");
      Eigen::VectorXd code(static_cast<int>(c.size()));
      for (int i = 0; i < code.size(); ++i) code[i] = c.at(i).get<double>();
      d.shape_code = std::move(code);
    }
  } catch (const nlohmann::json::exception& e) {
    fail_at(path, line_no, e.what());
  }
  if (d.score < 0.0 || d.score > 1.0)
    fail_at(path, line_no, "score outside [0,1]");
  if (d.box2d.xmax < d.box2d.xmin || d.box2d.ymax < d.box2d.ymin)
    fail_at(path, line_no, "box2d max < min");
  if (d.depth <= 0.0) fail_at(path, line_no, "depth must be positive");
  ViewpointBins bins;
  if (d.azimuth_bin < 0 || d.azimuth_bin >= bins.azimuth_bins)
    fail_at(path, line_no, "azi_bin out of range");
  if (d.elevation_bin < 0 || d.elevation_bin >= bins.elevation_bins)
    fail_at(path, line_no, "ele_bin out of range");
  if (d.scale.sx <= 0.0 || d.scale.sy <= 0.0 || d.scale.sz <= 0.0)
    fail_at(path, line_no, "scale components must be positive");
  if (d.shape_code && d.shape_code->size() != kShapeCodeDim)
    fail_at(path, line_no, "code must have length 64");
  return d;
}

std::map<int, std::vector<Detection>> read_detections(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::map<int, std::vector<Detection>> out;
  std::string line;
  int line_no = 0;
  int prev_frame = std::numeric_limits<int>::min();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(path, line_no, e.what());
    }
    Detection d = parse_detection(j, path, line_no);
    if (d.frame_id < prev_frame)
      fail_at(path, line_no, "frame ids must be non-decreasing");
    prev_frame = d.frame_id;
    out[d.frame_id].push_back(std::move(d));
  }
  return out;
}

}  // namespace

std::vector<FrameInput> load_sequence(const std::string& detections_path,
                                      const std::string& poses_path,
                                      const std::string& intrinsics_path,
                                      double frame_period) {
  const CameraIntrinsics k = read_intrinsics(intrinsics_path);
  const std::map<int, Pose> poses = read_poses(poses_path);
  std::map<int, std::vector<Detection>> dets = read_detections(detections_path);

  for (const auto& [frame, _] : dets) {
    if (!poses.count(frame))
      throw std::runtime_error(detections_path + ": frame " +
                               std::to_string(frame) + " has no pose in " +
                               poses_path);
  }

  std::vector<FrameInput> out;
  out.reserve(poses.size());
  for (const auto& [frame, pose] : poses) {
    FrameInput fi;
    fi.frame_id = frame;
    fi.timestamp = frame * frame_period;
    fi.t_wc = pose;
    fi.intrinsics = k;
    if (auto it = dets.find(frame); it != dets.end())
      fi.detections = std::move(it->second);
    out.push_back(std::move(fi));
  }
  return out;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& k) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  nlohmann::json row = {k.fx, k.fy, k.cx, k.cy};
  out << row[0].dump() << " " << row[1].dump() << " " << row[2].dump() << " "
      << row[3].dump() << "\n";
}

void write_poses(const std::string& path,
                 const std::vector<std::pair<int, Pose>>& poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& [frame, pose] : poses) {
    const Eigen::Quaterniond q(pose.rotation);
    const nlohmann::json row = {pose.translation.x(), pose.translation.y(),
                                pose.translation.z(), q.x(), q.y(), q.z(),
                                q.w()};
    out << frame;
    for (const auto& v : row) out << " " << v.dump();
    out << "\n";
  }
}

void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& detections) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const Detection& d : detections) {
    nlohmann::ordered_json j;
    j["frame"] = d.frame_id;
    j["class"] = d.class_label;
    j["score"] = d.score;
    j["box2d"] = {d.box2d.xmin, d.box2d.ymin, d.box2d.xmax, d.box2d.ymax};
    j["offset"] = {d.offset.x(), d.offset.y()};
    j["depth"] = d.depth;
    j["azi_bin"] = d.azimuth_bin;
    j["ele_bin"] = d.elevation_bin;
    j["scale"] = {d.scale.sx, d.scale.sy, d.scale.sz};
    if (d.shape_code) {
      std::vector<double> code(d.shape_code->data(),
                               d.shape_code->data() + d.shape_code->size());
      j["code"] = code;
    }
    out << j.dump() << "\n";
  }
}

std::vector<Detection> load_kitti_labels(const std::string& path,
                                         const ViewpointBins& bins) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<Detection> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int frame, track_id;
    std::string type;
    double truncated, occluded, alpha;
    double x1, y1, x2, y2, h, w, l, lx, ly, lz, ry;
    if (!(ss >> frame >> track_id >> type >> truncated >> occluded >> alpha >>
          x1 >> y1 >> x2 >> y2 >> h >> w >> l >> lx >> ly >> lz >> ry))
      fail_at(path, line_no, "expected KITTI tracking label columns");
    if (type == "DontCare") continue;
    if (lz <= 0.0) continue;
    double score = 1.0;
    ss >> score;

    Detection d;
    d.frame_id = frame;
    d.class_label = type;
    d.score = std::clamp(score, 0.0, 1.0);
    d.box2d = {x1, y1, x2, y2};
    d.offset = Eigen::Vector2d::Zero();
    d.depth = lz;
    // Camera y points down, so a positive rotation about it is a negative
    // yaw about the object's up axis.
    const auto [azi, ele] = nearest_bins(rot_z(-ry), bins);
    d.azimuth_bin = azi;
    d.elevation_bin = ele;
    d.scale = {l, w, h};
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace motrec
