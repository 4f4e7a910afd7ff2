#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "motrec/geometry.hpp"

namespace motrec {

/// Latent shape embedding length.
inline constexpr int kShapeCodeDim = 64;

/// One 2D detection with lifted 3D attributes, as the detector head emits it.
struct Detection {
  int frame_id = 0;
  std::string class_label;
  double score = 0.0;
  Box2 box2d;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  double depth = 0.0;
  int azimuth_bin = 0;
  int elevation_bin = 0;
  Scale scale;
  std::optional<Eigen::VectorXd> shape_code;
};

/// Everything the tracker consumes for one frame.
struct FrameInput {
  int frame_id = 0;
  double timestamp = 0.0;
  Pose t_wc;
  CameraIntrinsics intrinsics;
  std::vector<Detection> detections;
};

/// Discretisation of the viewpoint head. Azimuth covers [0, 360) deg;
/// the elevation range is configurable (the usual vertical field seen by
/// a hand-held or vehicle camera).
struct ViewpointBins {
  int azimuth_bins = 36;
  int elevation_bins = 10;
  double elevation_min_deg = -45.0;
  double elevation_max_deg = 45.0;

  double azimuth_angle(int bin) const;
  double elevation_angle(int bin) const;
};

/// Center + offset + depth lifted to the object center in the camera frame.
/// Throws std::invalid_argument when depth <= 0.
Eigen::Vector3d back_project(const Detection& d, const CameraIntrinsics& k);

/// Bin pair to rotation: R_co = R_ele(about +y) * R_azi(about +z), angles at
/// bin centers. Throws std::out_of_range on a bin outside its range.
Eigen::Matrix3d decode_viewpoint(int azimuth_bin, int elevation_bin,
                                 const ViewpointBins& bins = {});

/// Bin pair whose decoded rotation is Frobenius-closest to r. Scans
/// elevation then azimuth ascending; first strict minimum wins.
std::pair<int, int> nearest_bins(const Eigen::Matrix3d& r,
                                 const ViewpointBins& bins = {});

/// Full lift of a detection to an oriented camera-frame box.
OrientedBox3 to_box3(const Detection& d, const CameraIntrinsics& k,
                     const ViewpointBins& bins = {});

/// Reads the three input files into per-frame inputs ordered by frame id.
/// Every pose frame yields one FrameInput (empty detection list when the
/// frame has none); a detection frame without a pose is an error. Throws
/// std::runtime_error with file and line on any parse or validation failure.
std::vector<FrameInput> load_sequence(const std::string& detections_path,
                                      const std::string& poses_path,
                                      const std::string& intrinsics_path,
                                      double frame_period = 0.1);

/// Writers for the same formats (used by the scenario generator and tests).
void write_intrinsics(const std::string& path, const CameraIntrinsics& k);
void write_poses(const std::string& path,
                 const std::vector<std::pair<int, Pose>>& poses);
void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& detections);

/// KITTI tracking label adapter: type, bbox, dimensions (h,w,l), location,
/// rotation_y map onto Detection with depth = location z, scale = (l,w,h)
/// and yaw snapped to the nearest viewpoint bin. DontCare rows and rows with
/// non-positive depth are skipped.
std::vector<Detection> load_kitti_labels(const std::string& path,
                                         const ViewpointBins& bins = {});

}  // namespace motrec
