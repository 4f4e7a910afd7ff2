#include "motrec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

namespace motrec {

namespace {

void validate(const ScenarioSpec& spec) {
  if (spec.duration <= 0) throw std::invalid_argument("duration must be positive");
  if (!(spec.frame_rate > 0.0)) {
    throw std::invalid_argument("frame_rate must be positive");
  }
  if (spec.image_width <= 0 || spec.image_height <= 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (!(spec.intrinsics.fx > 0.0) || !(spec.intrinsics.fy > 0.0)) {
    throw std::invalid_argument("focal lengths must be positive");
  }
  const NoiseSpec& n = spec.noise;
  if (n.sigma_pos < 0.0 || n.sigma_depth < 0.0) {
    throw std::invalid_argument("noise sigmas must be non-negative");
  }
  if (n.miss_rate < 0.0 || n.miss_rate > 1.0 || n.fp_rate < 0.0 ||
      n.fp_rate > 1.0) {
    throw std::invalid_argument("miss_rate and fp_rate must lie in [0, 1]");
  }
  for (const SimObject& o : spec.objects) {
    if (o.scale.sx <= 0.0 || o.scale.sy <= 0.0 || o.scale.sz <= 0.0) {
      throw std::invalid_argument("object scale must be positive");
    }
    if (!is_orthonormal(o.pose.rotation, 1e-6)) {
      throw std::invalid_argument("object rotation must be orthonormal");
    }
  }
  for (const OcclusionWindow& w : spec.occlusions) {
    if (w.object_index < 0 ||
        w.object_index >= static_cast<int>(spec.objects.size())) {
      throw std::invalid_argument("occlusion object_index out of range");
    }
    if (w.end_frame < w.begin_frame) {
      throw std::invalid_argument("occlusion window must not be inverted");
    }
  }
}

Pose object_pose_at(const SimObject& o, double t, double frame_rate) {
  Pose p = o.pose;
  switch (o.motion) {
    case MotionKind::kStatic:
      break;
    case MotionKind::kConstantVelocity:
      p.translation += o.velocity * t;
      break;
    case MotionKind::kSwitchToVelocity: {
      const double t_switch = o.switch_frame / frame_rate;
      p.translation += o.velocity * std::max(0.0, t - t_switch);
      break;
    }
  }
  return p;
}

bool occluded(const ScenarioSpec& spec, int object_index, int frame) {
  for (const OcclusionWindow& w : spec.occlusions) {
    if (w.object_index == object_index && frame >= w.begin_frame &&
        frame < w.end_frame) {
      return true;
    }
  }
  return false;
}

Eigen::VectorXd padded_code(double a, double b, double c) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kShapeCodeDim);
  v[0] = a;
  v[1] = b;
  v[2] = c;
  return v;
}

}  // namespace

Pose camera_pose_at(const ScenarioSpec& spec, int frame) {
  const auto& wp = spec.camera_waypoints;
  if (wp.empty()) return Pose::identity();
  if (wp.size() == 1 || spec.duration <= 1) return wp.front();

  double alpha = static_cast<double>(frame) / (spec.duration - 1) *
                 static_cast<double>(wp.size() - 1);
  alpha = std::clamp(alpha, 0.0, static_cast<double>(wp.size() - 1));
  const int i =
      std::min(static_cast<int>(alpha), static_cast<int>(wp.size()) - 2);
  const double u = alpha - i;

  Pose p;
  p.translation = (1.0 - u) * wp[i].translation + u * wp[i + 1].translation;
  const Eigen::Quaterniond qa(wp[i].rotation);
  const Eigen::Quaterniond qb(wp[i + 1].rotation);
  p.rotation = qa.slerp(u, qb).toRotationMatrix();
  return p;
}

SimResult generate(const ScenarioSpec& spec) {
  validate(spec);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const CameraIntrinsics& k = spec.intrinsics;
  const double w = spec.image_width;
  const double h = spec.image_height;

  SimResult out;
  out.frames.reserve(spec.duration);
  std::vector<char> seen(spec.objects.size(), 0);

  for (int f = 0; f < spec.duration; ++f) {
    FrameInput frame;
    frame.frame_id = f;
    frame.timestamp = f / spec.frame_rate;
    frame.t_wc = camera_pose_at(spec, f);
    frame.intrinsics = k;
    const Pose t_cw = inverse(frame.t_wc);

    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const SimObject& obj = spec.objects[i];
      const Pose t_wo = object_pose_at(obj, frame.timestamp, spec.frame_rate);
      const Eigen::Vector3d c_cam = t_cw.apply(t_wo.translation);
      if (c_cam.z() <= 0.0) continue;
      const Eigen::Vector2d pix = project_point(k, c_cam);
      if (pix.x() < 0.0 || pix.x() >= w || pix.y() < 0.0 || pix.y() >= h) {
        continue;
      }
      seen[i] = 1;

      GtObject g;
      g.frame_id = f;
      g.instance_id = static_cast<int>(i);
      g.class_label = obj.class_label;
      g.box = OrientedBox3{t_wo, obj.scale, Frame::kWorld};
      out.gt.push_back(g);

      if (occluded(spec, static_cast<int>(i), f)) continue;
      if (spec.noise.miss_rate > 0.0 && unit(rng) < spec.noise.miss_rate) {
        continue;
      }

      const OrientedBox3 world_box{t_wo, obj.scale, Frame::kWorld};
      const auto cs = corners(world_box);
      const auto bb = project_bbox(
          k, t_cw, std::vector<Eigen::Vector3d>(cs.begin(), cs.end()));
      if (!bb) continue;

      const double sig_u = spec.noise.sigma_pos * k.fx / c_cam.z();
      const double sig_v = spec.noise.sigma_pos * k.fy / c_cam.z();
      Eigen::Vector2d noisy_pix = pix;
      noisy_pix.x() += gauss(rng) * sig_u;
      noisy_pix.y() += gauss(rng) * sig_v;
      const double noisy_depth =
          std::max(1e-3, c_cam.z() + gauss(rng) * spec.noise.sigma_depth);

      Detection d;
      d.frame_id = f;
      d.class_label = obj.class_label;
      d.score = 0.7 + 0.3 * unit(rng);
      d.box2d = *bb;
      d.offset = noisy_pix - bb->center();
      d.depth = noisy_depth;
      const Eigen::Matrix3d r_co = t_cw.rotation * t_wo.rotation;
      const auto bins = nearest_bins(r_co);
      d.azimuth_bin = bins.first;
      d.elevation_bin = bins.second;
      d.scale = obj.scale;
      d.shape_code = obj.shape_code;
      frame.detections.push_back(std::move(d));
    }

    if (spec.noise.fp_rate > 0.0 && !spec.objects.empty() &&
        unit(rng) < spec.noise.fp_rate) {
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(spec.objects.size()) - 1);
      const SimObject& tpl = spec.objects[pick(rng)];
      const double u = unit(rng) * w;
      const double v = unit(rng) * h;
      const double z = 2.0 + unit(rng) * 38.0;

      Detection d;
      d.frame_id = f;
      d.class_label = tpl.class_label;
      d.score = 0.3 + 0.5 * unit(rng);
      const double half_u = 0.5 * k.fx * tpl.scale.sx / z;
      const double half_v = 0.5 * k.fy * tpl.scale.sz / z;
      d.box2d = Box2{u - half_u, v - half_v, u + half_u, v + half_v};
      d.offset = Eigen::Vector2d::Zero();
      d.depth = z;
      std::uniform_int_distribution<int> azi(0, 35);
      std::uniform_int_distribution<int> ele(0, 9);
      d.azimuth_bin = azi(rng);
      d.elevation_bin = ele(rng);
      d.scale = tpl.scale;
      d.shape_code = tpl.shape_code;
      frame.detections.push_back(std::move(d));
    }

    out.frames.push_back(std::move(frame));
  }

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    if (!seen[i]) {
      out.warnings.push_back("object " + std::to_string(i) + " (" +
                             spec.objects[i].class_label +
                             ") never entered the camera view");
    }
  }
  return out;
}

ScenarioSpec preset(const std::string& name) {
  ScenarioSpec spec;
  if (name == "indoor_office") {
    spec.seed = 1;
    spec.duration = 100;
    spec.frame_rate = 10.0;
    spec.noise = NoiseSpec{0.02, 0.05, 0.05, 0.02};
    Pose start = Pose::identity();
    Pose end = Pose::identity();
    end.translation = Eigen::Vector3d(0.4, 0.0, 0.3);
    spec.camera_waypoints = {start, end};

    SimObject chair;
    chair.class_label = "chair";
    chair.pose.rotation = rot_z(0.4);
    chair.pose.translation = Eigen::Vector3d(1.2, 0.3, 3.0);
    chair.scale = Scale{0.55, 0.5, 0.95};
    chair.shape_code = padded_code(0.35, 0.33, 0.45);

    SimObject table;
    table.class_label = "table";
    table.pose.rotation = rot_z(-0.2);
    table.pose.translation = Eigen::Vector3d(-0.9, 0.25, 4.2);
    table.scale = Scale{1.4, 0.8, 0.75};
    table.shape_code = padded_code(0.46, 0.4, 0.3);

    SimObject sofa;
    sofa.class_label = "sofa";
    sofa.pose.rotation = rot_z(1.2);
    sofa.pose.translation = Eigen::Vector3d(0.3, 0.35, 5.5);
    sofa.scale = Scale{1.8, 0.85, 0.8};
    sofa.shape_code = padded_code(0.45, 0.42, 0.36);

    SimObject chair2 = chair;
    chair2.pose.rotation = rot_z(2.0);
    chair2.pose.translation = Eigen::Vector3d(-1.6, 0.3, 3.4);

    spec.objects = {chair, table, sofa, chair2};
    return spec;
  }
  if (name == "outdoor_road") {
    spec.seed = 2;
    spec.duration = 300;
    spec.frame_rate = 10.0;
    spec.noise = NoiseSpec{0.1, 0.1, 0.1, 0.05};

    SimObject lead;
    lead.class_label = "car";
    lead.pose.translation = Eigen::Vector3d(-2.5, 1.2, 8.0);
    lead.scale = Scale{1.9, 1.6, 4.5};
    lead.motion = MotionKind::kConstantVelocity;
    lead.velocity = Eigen::Vector3d(0.0, 0.0, 10.0);
    lead.shape_code = padded_code(0.4, 0.38, 0.47);

    SimObject oncoming = lead;
    oncoming.pose.translation = Eigen::Vector3d(2.5, 1.2, 280.0);
    oncoming.velocity = Eigen::Vector3d(0.0, 0.0, -10.0);

    SimObject parked = lead;
    parked.pose.translation = Eigen::Vector3d(4.5, 1.2, 18.0);
    parked.motion = MotionKind::kStatic;
    parked.velocity = Eigen::Vector3d::Zero();

    spec.objects = {lead, oncoming, parked};
    return spec;
  }
  if (name == "occlusion_demo") {
    spec.seed = 3;
    spec.duration = 100;
    spec.frame_rate = 10.0;
    spec.noise = NoiseSpec{0.01, 0.02, 0.0, 0.0};

    // Two chairs on the same camera ray. The nearer one keeps covering the
    // far one's image region, so when the far chair's detections vanish the
    // tracker sees an occluder box there rather than exposed empty space.
    SimObject chair;
    chair.class_label = "chair";
    chair.pose.translation = Eigen::Vector3d(0.35, 0.21, 3.5);
    chair.scale = Scale{0.55, 0.5, 0.95};
    chair.shape_code = padded_code(0.35, 0.33, 0.45);

    SimObject occluder = chair;
    occluder.pose.translation = Eigen::Vector3d(0.3, 0.18, 3.0);

    spec.objects = {chair, occluder};
    // Hidden through frames 30..60 inclusive.
    spec.occlusions = {OcclusionWindow{0, 30, 61}};
    return spec;
  }
  if (name == "mode_switch") {
    spec.seed = 4;
    spec.duration = 100;
    // Half-second steps make each constant-velocity hop large against the
    // measurement noise, so the motion-prior inference has real evidence.
    spec.frame_rate = 2.0;
    spec.noise = NoiseSpec{0.05, 0.05, 0.0, 0.0};

    SimObject chair;
    chair.class_label = "chair";
    chair.pose.translation = Eigen::Vector3d(-6.0, 0.3, 20.0);
    chair.scale = Scale{0.55, 0.5, 0.95};
    chair.motion = MotionKind::kSwitchToVelocity;
    chair.switch_frame = 40;
    chair.velocity = Eigen::Vector3d(0.5, 0.0, 0.0);
    chair.shape_code = padded_code(0.35, 0.33, 0.45);

    spec.objects = {chair};
    return spec;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace motrec
