#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace motrec {

/// Coordinate frame a box or mesh lives in.
enum class Frame { kCamera, kWorld };

/// Rigid transform mapping points from a source frame into a target frame.
/// rotation must stay orthonormal with det +1.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  static Pose identity() { return Pose{}; }
};

/// Per-axis metric extents of an object, all strictly positive.
struct Scale {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  Eigen::Vector3d vec() const { return {sx, sy, sz}; }
};

/// 9-DoF object localisation: pose (object -> frame) plus per-axis scale.
struct OrientedBox3 {
  Pose pose;
  Scale scale;
  Frame frame = Frame::kCamera;
};

/// Pinhole camera intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Axis-aligned pixel rectangle, xmax >= xmin and ymax >= ymin.
struct Box2 {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const {
    return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

bool is_orthonormal(const Eigen::Matrix3d& r, double tol = 1e-9);

/// Rotation about +z by yaw (radians).
Eigen::Matrix3d rot_z(double yaw);
/// Rotation about +y by angle (radians).
Eigen::Matrix3d rot_y(double angle);
/// Rotation about +x by angle (radians).
Eigen::Matrix3d rot_x(double angle);

/// True when the box rotation is (within tol) a rotation about +z only.
bool is_upright(const OrientedBox3& box, double tol = 1e-9);

/// Yaw of the rotation's x-axis projected into the xy-plane.
double yaw_of(const Eigen::Matrix3d& r);

/// Same box with its rotation replaced by the closest rotation about +z.
OrientedBox3 gravity_aligned(const OrientedBox3& box);

/// The 8 box corners, ordered lexicographically over the corner sign
/// pattern (sx,sy,sz) with - before +.
std::array<Eigen::Vector3d, 8> corners(const OrientedBox3& box);

double iou2d(const Box2& a, const Box2& b);

/// Exact IoU for upright boxes (BEV rectangle clipping x vertical overlap).
/// Throws std::invalid_argument on frame mismatch or non-upright input;
/// use voxel_iou for arbitrary rotations.
double iou3d(const OrientedBox3& a, const OrientedBox3& b);

/// Generalised IoU for upright boxes. Enclosing volume is the convex hull
/// of both footprints' BEV corners times the enclosing z-span.
double giou3d(const OrientedBox3& a, const OrientedBox3& b);

/// Brute-force IoU: fraction of voxel centers of the joint bounding region
/// falling inside both boxes over those falling inside either. Works for
/// arbitrary rotations; the reference oracle for iou3d.
double voxel_iou(const OrientedBox3& a, const OrientedBox3& b,
                 int resolution = 128);

/// Pinhole projection; throws std::domain_error when p.z() <= 0.
Eigen::Vector2d project_point(const CameraIntrinsics& k,
                              const Eigen::Vector3d& p_cam);

/// Pixel bounding box of the world points after transform into the camera;
/// points behind the camera are skipped. nullopt when nothing is in front.
std::optional<Box2> project_bbox(const CameraIntrinsics& k, const Pose& t_cw,
                                 const std::vector<Eigen::Vector3d>& points_w);

namespace detail {

/// Area of the convex polygon clip(subject, clip) via Sutherland-Hodgman.
/// Both polygons must be convex and counter-clockwise.
double convex_clip_area(const std::vector<Eigen::Vector2d>& subject,
                        const std::vector<Eigen::Vector2d>& clip);

/// Area of the 2D convex hull of a point set (monotone chain).
double convex_hull_area(std::vector<Eigen::Vector2d> points);

/// CCW footprint rectangle of an upright box in the xy-plane.
std::array<Eigen::Vector2d, 4> bev_footprint(const OrientedBox3& box);

/// voxel_iou forced through the plain triple loop, bypassing the factorised
/// upright path. Exposed so tests can pin both paths to identical counts.
double voxel_iou_general(const OrientedBox3& a, const OrientedBox3& b,
                         int resolution);

}  // namespace detail

}  // namespace motrec
