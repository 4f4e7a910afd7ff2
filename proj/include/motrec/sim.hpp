#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motrec/detection.hpp"
#include "motrec/eval.hpp"

namespace motrec {

enum class MotionKind { kStatic, kConstantVelocity, kSwitchToVelocity };

/// One scripted object. velocity applies from the start (constant velocity)
/// or from switch_frame on (switch), in meters per second.
struct SimObject {
  std::string class_label;
  Pose pose;  // world, at frame 0
  Scale scale;
  MotionKind motion = MotionKind::kStatic;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  int switch_frame = 0;
  std::optional<Eigen::VectorXd> shape_code;
};

/// Detector noise. sigma_pos lands on the projected centre as pixel noise
/// sigma_pos * focal / depth, so the back-projected position error is
/// sigma_pos meters at every range; sigma_depth perturbs the depth readout
/// directly. miss_rate drops a visible object's detection; fp_rate injects
/// at most one spurious detection per frame.
struct NoiseSpec {
  double sigma_pos = 0.0;
  double sigma_depth = 0.0;
  double miss_rate = 0.0;
  double fp_rate = 0.0;
};

/// Object object_index produces no detections in frames [begin, end).
struct OcclusionWindow {
  int object_index = 0;
  int begin_frame = 0;
  int end_frame = 0;
};

struct ScenarioSpec {
  std::uint64_t seed = 0;
  int duration = 0;  // frames
  double frame_rate = 10.0;
  std::vector<SimObject> objects;
  std::vector<Pose> camera_waypoints;  // camera-to-world, interpolated
  NoiseSpec noise;
  std::vector<OcclusionWindow> occlusions;
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0};
  int image_width = 640;
  int image_height = 480;
};

struct SimResult {
  std::vector<FrameInput> frames;
  std::vector<GtObject> gt;  // instance id = object index
  std::vector<std::string> warnings;
};

/// Camera pose for one frame: waypoints spread uniformly over the duration,
/// linear in translation, slerp in rotation. No waypoints means identity.
Pose camera_pose_at(const ScenarioSpec& spec, int frame);

/// Runs the scenario. Ground truth is emitted for every frame in which an
/// object's centre projects inside the image; detections additionally
/// survive occlusion windows and miss coin flips, carry measurement-space
/// noise, and get their orientation snapped to the viewpoint bins. The seed
/// fixes every random draw. An object that never enters the view produces a
/// warning entry instead of data.
SimResult generate(const ScenarioSpec& spec);

/// Fixed demo scenarios: indoor_office (static furniture, gentle camera
/// drift), outdoor_road (two 10 m/s vehicles plus a parked one),
/// occlusion_demo (a static chair hidden in frames 30..60) and mode_switch
/// (static for 40 frames, then 0.5 m/s along +x). Unknown names throw.
ScenarioSpec preset(const std::string& name);

}  // namespace motrec
