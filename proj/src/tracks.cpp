#include "motrec/tracks.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace motrec {

namespace {

[[noreturn]] void fail_at(const std::string& path, int line,
                          const std::string& what) {
  throw std::runtime_error(path + " line " + std::to_string(line) + ": " +
                           what);
}

bool live(const Track& t) { return t.status != TrackStatus::kTerminated; }

TrackedObject snapshot(const Track& t, int frame_id) {
  TrackedObject o;
  o.frame_id = frame_id;
  o.id = t.id;
  o.class_label = t.class_label;
  o.center = t.center();
  o.velocity = t.velocity();
  o.rotation = t.orientation;
  o.scale = t.scale;
  o.status = t.status;
  o.motion = motion_status(t.state);
  o.p_static = t.state.probs[kStaticModel];
  return o;
}

void confirm_if_due(Track& t, int n_confirm, std::vector<TrackEvent>& events) {
  if (t.status == TrackStatus::kTentative && t.hits >= n_confirm) {
    t.status = TrackStatus::kConfirmed;
    events.push_back({TrackEventKind::kConfirmed, t.id});
  }
}

}  // namespace

TrackerConfig indoor_config() { return TrackerConfig{}; }

TrackerConfig outdoor_config() {
  TrackerConfig cfg;
  cfg.imm.measurement_noise = 0.25 * Eigen::Matrix3d::Identity();
  cfg.imm.process_noise_accel = 1.0;
  cfg.gate = 1.75;
  return cfg;
}

WorldDetection lift_detection(const Detection& d, const CameraIntrinsics& k,
                              const Pose& t_wc, const ViewpointBins& bins) {
  const OrientedBox3 cam_box = to_box3(d, k, bins);
  OrientedBox3 world_box;
  world_box.pose = compose(t_wc, cam_box.pose);
  world_box.scale = cam_box.scale;
  world_box.frame = Frame::kWorld;

  WorldDetection out;
  out.class_label = d.class_label;
  out.box = gravity_aligned(world_box);
  out.score = d.score;
  out.shape_code = d.shape_code;
  return out;
}

std::vector<int> select_matchable(const MapState& map) {
  std::vector<int> out;
  for (std::size_t i = 0; i < map.tracks.size(); ++i) {
    if (live(map.tracks[i])) out.push_back(static_cast<int>(i));
  }
  return out;
}

void merge_detection(Track& t, const WorldDetection& d, const ImmConfig& cfg,
                     int frame_id) {
  if (t.class_label != d.class_label) {
    throw std::invalid_argument("merge_detection: class mismatch (" +
                                t.class_label + " vs " + d.class_label + ")");
  }
  t.state = imm_update(t.state, d.box.pose.translation, cfg);
  t.orientation = d.box.pose.rotation;

  const Eigen::Vector3d mean =
      (t.scale.vec() * t.scale_count + d.box.scale.vec()) /
      (t.scale_count + 1);
  t.scale = Scale{mean.x(), mean.y(), mean.z()};
  t.scale_count += 1;

  if (d.shape_code.has_value()) {
    if (t.code_count == 0) {
      t.code_mean = *d.shape_code;
    } else {
      if (t.code_mean.size() != d.shape_code->size()) {
        throw std::invalid_argument("merge_detection: shape code length");
      }
      t.code_mean =
          (t.code_mean * t.code_count + *d.shape_code) / (t.code_count + 1);
    }
    t.code_count += 1;
  }

  t.hits += 1;
  t.misses = 0;
  t.last_observed_frame = frame_id;
  t.matched_this_frame = true;
  t.not_visible_streak = 0;
}

void handle_misses(MapState& map, std::vector<TrackEvent>& events) {
  for (Track& t : map.tracks) {
    if (!live(t) || t.matched_this_frame) continue;
    t.hits = 0;
    t.misses += 1;
    if (t.status == TrackStatus::kTentative) {
      t.status = TrackStatus::kTerminated;
      events.push_back({TrackEventKind::kTerminated, t.id});
      continue;
    }
    if (motion_status(t.state) == MotionStatus::kDynamic &&
        t.misses >= map.config.n_terminate) {
      t.status = TrackStatus::kTerminated;
      events.push_back({TrackEventKind::kTerminated, t.id});
    }
  }
}

void prune_invisible(MapState& map, const FrameInput& frame,
                     std::vector<TrackEvent>& events) {
  const CameraIntrinsics& k = frame.intrinsics;
  const double w =
      map.config.image_width > 0 ? map.config.image_width : 2.0 * k.cx;
  const double h =
      map.config.image_height > 0 ? map.config.image_height : 2.0 * k.cy;
  const Pose t_cw = inverse(frame.t_wc);

  // The object reappeared under a new identity: some same-class track was
  // confirmed after this one was last seen.
  const auto replaced = [&map](const Track& t) {
    for (const Track& u : map.tracks) {
      if (u.id != t.id && u.status == TrackStatus::kConfirmed &&
          u.class_label == t.class_label &&
          u.born_frame > t.last_observed_frame) {
        return true;
      }
    }
    return false;
  };

  for (Track& t : map.tracks) {
    if (!live(t)) continue;
    if (t.matched_this_frame) {
      t.not_visible_streak = 0;
      continue;
    }
    const Eigen::Vector3d c_cam = t_cw.apply(t.center());
    if (c_cam.z() <= 0.0) continue;  // off-screen: no evidence either way
    const Eigen::Vector2d pix = project_point(k, c_cam);
    if (pix.x() < 0.0 || pix.x() >= w || pix.y() < 0.0 || pix.y() >= h) {
      continue;
    }
    const auto cs = corners(t.world_box());
    const auto bb = project_bbox(
        k, t_cw, std::vector<Eigen::Vector3d>(cs.begin(), cs.end()));
    if (!bb) continue;

    double best = 0.0;
    for (const Detection& d : frame.detections) {
      best = std::max(best, iou2d(*bb, d.box2d));
    }
    if (best < map.config.visibility_iou) {
      t.not_visible_streak += 1;
      events.push_back({TrackEventKind::kNotVisible, t.id});
      if (t.not_visible_streak >= map.config.stale_after &&
          motion_status(t.state) == MotionStatus::kStatic && replaced(t)) {
        t.status = TrackStatus::kTerminated;
        events.push_back({TrackEventKind::kStaleRemoved, t.id});
      }
    } else {
      // Some detection covers the spot (the object itself or an occluder):
      // absence is explained, no negative evidence.
      t.not_visible_streak = 0;
    }
  }
}

FrameOutput step(MapState& map, const FrameInput& frame) {
  if (frame.frame_id <= map.frame_id) {
    throw std::invalid_argument("step: frame " + std::to_string(frame.frame_id) +
                                " is not ahead of frame " +
                                std::to_string(map.frame_id));
  }
  const bool first = map.frame_id < 0;
  const double dt = frame.timestamp - map.last_timestamp;
  if (!first && dt <= 0.0) {
    throw std::invalid_argument("step: timestamps must strictly increase");
  }

  FrameOutput out;
  out.frame_id = frame.frame_id;

  std::vector<WorldDetection> dets;
  dets.reserve(frame.detections.size());
  for (const Detection& d : frame.detections) {
    dets.push_back(lift_detection(d, frame.intrinsics, frame.t_wc,
                                  map.config.bins));
  }

  for (Track& t : map.tracks) {
    if (!live(t)) continue;
    t.matched_this_frame = false;
    if (!first) t.state = imm_predict(t.state, dt, map.config.imm);
  }

  const std::vector<int> matchable = select_matchable(map);

  Assignment assign;
  if (!dets.empty() && !matchable.empty()) {
    std::vector<OrientedBox3> det_boxes, track_boxes;
    std::vector<std::string> det_classes, track_classes;
    det_boxes.reserve(dets.size());
    det_classes.reserve(dets.size());
    for (const WorldDetection& d : dets) {
      det_boxes.push_back(d.box);
      det_classes.push_back(d.class_label);
    }
    track_boxes.reserve(matchable.size());
    track_classes.reserve(matchable.size());
    for (int idx : matchable) {
      track_boxes.push_back(map.tracks[idx].world_box());
      track_classes.push_back(map.tracks[idx].class_label);
    }
    CostMatrix c =
        build_cost_matrix(det_boxes, det_classes, track_boxes, track_classes);
    c.col_ids = matchable;  // report matches against map.tracks positions
    assign = solve(c, map.config.gate, map.config.pre_mask_gate);
  } else {
    assign.unmatched_detections.resize(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      assign.unmatched_detections[i] = static_cast<int>(i);
    }
  }

  for (const auto& [det_idx, track_idx] : assign.matches) {
    Track& t = map.tracks[track_idx];
    merge_detection(t, dets[det_idx], map.config.imm, frame.frame_id);
    confirm_if_due(t, map.config.n_confirm, out.events);
  }
  out.matched = static_cast<int>(assign.matches.size());

  for (int det_idx : assign.unmatched_detections) {
    const WorldDetection& d = dets[det_idx];
    Track t;
    t.id = map.next_id++;
    t.class_label = d.class_label;
    t.state = imm_init(d.box.pose.translation, map.config.imm);
    t.orientation = d.box.pose.rotation;
    t.scale = d.box.scale;
    t.scale_count = 1;
    if (d.shape_code.has_value()) {
      t.code_mean = *d.shape_code;
      t.code_count = 1;
    }
    t.hits = 1;
    t.born_frame = frame.frame_id;
    t.last_observed_frame = frame.frame_id;
    t.matched_this_frame = true;
    out.events.push_back({TrackEventKind::kBorn, t.id});
    confirm_if_due(t, map.config.n_confirm, out.events);
    map.tracks.push_back(std::move(t));
  }
  out.unmatched_detections =
      static_cast<int>(assign.unmatched_detections.size());

  handle_misses(map, out.events);
  prune_invisible(map, frame, out.events);

  for (const Track& t : map.tracks) {
    if (live(t)) out.objects.push_back(snapshot(t, frame.frame_id));
  }

  map.frame_id = frame.frame_id;
  map.last_timestamp = frame.timestamp;
  return out;
}

void write_tracks_jsonl(const std::string& path,
                        const std::vector<FrameOutput>& outputs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const FrameOutput& fo : outputs) {
    for (const TrackedObject& o : fo.objects) {
      nlohmann::ordered_json j;
      j["frame"] = o.frame_id;
      j["id"] = o.id;
      j["class"] = o.class_label;
      j["center"] = {o.center.x(), o.center.y(), o.center.z()};
      j["velocity"] = {o.velocity.x(), o.velocity.y(), o.velocity.z()};
      std::vector<double> rotation(9);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rotation[3 * r + c] = o.rotation(r, c);
      j["rotation"] = rotation;
      j["scale"] = {o.scale.sx, o.scale.sy, o.scale.sz};
      j["status"] =
          o.status == TrackStatus::kConfirmed ? "confirmed" : "tentative";
      j["motion"] = o.motion == MotionStatus::kStatic ? "static" : "dynamic";
      j["p_static"] = o.p_static;
      out << j.dump() << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TrackedObject> read_tracks_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TrackedObject> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(path, line_no, e.what());
    }
    TrackedObject o;
    try {
      o.frame_id = j.at("frame").get<int>();
      o.id = j.at("id").get<int>();
      o.class_label = j.at("class").get<std::string>();
      const auto center = j.at("center").get<std::vector<double>>();
      const auto velocity = j.at("velocity").get<std::vector<double>>();
      const auto rotation = j.at("rotation").get<std::vector<double>>();
      const auto scale = j.at("scale").get<std::vector<double>>();
      if (center.size() != 3 || velocity.size() != 3 || rotation.size() != 9 ||
          scale.size() != 3) {
        fail_at(path, line_no, "bad center/velocity/rotation/scale length");
      }
      o.center = {center[0], center[1], center[2]};
      o.velocity = {velocity[0], velocity[1], velocity[2]};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) o.rotation(r, c) = rotation[3 * r + c];
      o.scale = {scale[0], scale[1], scale[2]};
      const std::string status = j.at("status").get<std::string>();
      if (status == "tentative") {
        o.status = TrackStatus::kTentative;
      } else if (status == "confirmed") {
        o.status = TrackStatus::kConfirmed;
      } else {
        fail_at(path, line_no, "unknown status: " + status);
      }
      const std::string motion = j.at("motion").get<std::string>();
      if (motion == "static") {
        o.motion = MotionStatus::kStatic;
      } else if (motion == "dynamic") {
        o.motion = MotionStatus::kDynamic;
      } else {
        fail_at(path, line_no, "unknown motion: " + motion);
      }
      o.p_static = j.at("p_static").get<double>();
    } catch (const nlohmann::json::exception& e) {
      fail_at(path, line_no, e.what());
    }
    if (!is_orthonormal(o.rotation, 1e-6)) {
      fail_at(path, line_no, "rotation is not orthonormal");
    }
    if (o.scale.sx <= 0 || o.scale.sy <= 0 || o.scale.sz <= 0) {
      fail_at(path, line_no, "scale must be positive");
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<TrackedBox> to_tracked_boxes(const std::vector<TrackedObject>& rows,
                                         bool confirmed_only) {
  std::vector<TrackedBox> out;
  for (const TrackedObject& o : rows) {
    if (confirmed_only && o.status != TrackStatus::kConfirmed) continue;
    TrackedBox b;
    b.frame_id = o.frame_id;
    b.track_id = o.id;
    b.box = OrientedBox3{Pose{o.rotation, o.center}, o.scale, Frame::kWorld};
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace motrec
