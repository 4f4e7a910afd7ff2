#include "motrec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace motrec {

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

bool is_orthonormal(const Eigen::Matrix3d& r, double tol) {
  const Eigen::Matrix3d rtr = r.transpose() * r;
  return (rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d rot_z(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

Eigen::Matrix3d rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d rot_x(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

bool is_upright(const OrientedBox3& box, double tol) {
  const Eigen::Matrix3d& r = box.pose.rotation;
  // Rotation about +z leaves the z axis fixed in both directions.
  return std::abs(r(2, 2) - 1.0) <= tol && std::abs(r(0, 2)) <= tol &&
         std::abs(r(1, 2)) <= tol && std::abs(r(2, 0)) <= tol &&
         std::abs(r(2, 1)) <= tol;
}

double yaw_of(const Eigen::Matrix3d& r) { return std::atan2(r(1, 0), r(0, 0)); }

OrientedBox3 gravity_aligned(const OrientedBox3& box) {
  OrientedBox3 out = box;
  out.pose.rotation = rot_z(yaw_of(box.pose.rotation));
  return out;
}

std::array<Eigen::Vector3d, 8> corners(const OrientedBox3& box) {
  std::array<Eigen::Vector3d, 8> pts;
  const Eigen::Vector3d half = 0.5 * box.scale.vec();
  int n = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) {
        const Eigen::Vector3d local(sx * half.x(), sy * half.y(),
                                    sz * half.z());
        pts[n++] = box.pose.apply(local);
      }
  return pts;
}

double iou2d(const Box2& a, const Box2& b) {
  const double ix = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double iy = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

namespace detail {

double convex_clip_area(const std::vector<Eigen::Vector2d>& subject,
                        const std::vector<Eigen::Vector2d>& clip) {
  std::vector<Eigen::Vector2d> poly = subject;
  const size_t m = clip.size();
  for (size_t e = 0; e < m && !poly.empty(); ++e) {
    const Eigen::Vector2d& p0 = clip[e];
    const Eigen::Vector2d& p1 = clip[(e + 1) % m];
    const Eigen::Vector2d edge = p1 - p0;
    auto inside = [&](const Eigen::Vector2d& q) {
      return edge.x() * (q.y() - p0.y()) - edge.y() * (q.x() - p0.x()) >= 0.0;
    };
    auto intersect = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      const Eigen::Vector2d d = b - a;
      const double denom = edge.x() * d.y() - edge.y() * d.x();
      const double t =
          (edge.x() * (p0.y() - a.y()) - edge.y() * (p0.x() - a.x())) / denom;
      return Eigen::Vector2d(a + t * d);
    };
    std::vector<Eigen::Vector2d> next;
    next.reserve(poly.size() + 4);
    for (size_t i = 0; i < poly.size(); ++i) {
      const Eigen::Vector2d& cur = poly[i];
      const Eigen::Vector2d& prev = poly[(i + poly.size() - 1) % poly.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) next.push_back(intersect(prev, cur));
        next.push_back(cur);
      } else if (prev_in) {
        next.push_back(intersect(prev, cur));
      }
    }
    poly.swap(next);
  }
  if (poly.size() < 3) return 0.0;
  double twice_area = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    twice_area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice_area);
}

double convex_hull_area(std::vector<Eigen::Vector2d> points) {
  if (points.size() < 3) return 0.0;
  std::sort(points.begin(), points.end(),
            [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
              return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
            });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  const size_t n = points.size();
  std::vector<Eigen::Vector2d> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n; i-- > 1;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i - 1]) <= 0.0)
      --k;
    hull[k++] = points[i - 1];
  }
  hull.resize(k > 1 ? k - 1 : 0);
  if (hull.size() < 3) return 0.0;
  double twice_area = 0.0;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d& a = hull[i];
    const Eigen::Vector2d& b = hull[(i + 1) % hull.size()];
    twice_area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice_area);
}

std::array<Eigen::Vector2d, 4> bev_footprint(const OrientedBox3& box) {
  const double yaw = yaw_of(box.pose.rotation);
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hx = 0.5 * box.scale.sx;
  const double hy = 0.5 * box.scale.sy;
  const Eigen::Vector2d center = box.pose.translation.head<2>();
  // CCW order for positive signed area.
  const std::array<Eigen::Vector2d, 4> local = {
      Eigen::Vector2d(hx, hy), Eigen::Vector2d(-hx, hy),
      Eigen::Vector2d(-hx, -hy), Eigen::Vector2d(hx, -hy)};
  std::array<Eigen::Vector2d, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = center + Eigen::Vector2d(c * local[i].x() - s * local[i].y(),
                                      s * local[i].x() + c * local[i].y());
  }
  return out;
}

namespace {

struct UprightOverlap {
  double inter_vol = 0.0;
  double union_vol = 0.0;
  double vol_a = 0.0;
  double vol_b = 0.0;
};

void require_comparable(const OrientedBox3& a, const OrientedBox3& b) {
  if (a.frame != b.frame)
    throw std::invalid_argument("iou3d: boxes are in different frames");
  if (!is_upright(a, 1e-6) || !is_upright(b, 1e-6))
    throw std::invalid_argument(
        "iou3d: box rotation is not about +z; use voxel_iou for arbitrary "
        "rotations");
}

UprightOverlap upright_overlap(const OrientedBox3& a, const OrientedBox3& b) {
  UprightOverlap r;
  r.vol_a = a.scale.sx * a.scale.sy * a.scale.sz;
  r.vol_b = b.scale.sx * b.scale.sy * b.scale.sz;

  const auto fa = bev_footprint(a);
  const auto fb = bev_footprint(b);
  const double bev_inter =
      convex_clip_area({fa.begin(), fa.end()}, {fb.begin(), fb.end()});

  const double az0 = a.pose.translation.z() - 0.5 * a.scale.sz;
  const double az1 = a.pose.translation.z() + 0.5 * a.scale.sz;
  const double bz0 = b.pose.translation.z() - 0.5 * b.scale.sz;
  const double bz1 = b.pose.translation.z() + 0.5 * b.scale.sz;
  const double dz = std::min(az1, bz1) - std::max(az0, bz0);

  r.inter_vol = (dz > 0.0) ? bev_inter * dz : 0.0;
  r.union_vol = r.vol_a + r.vol_b - r.inter_vol;
  return r;
}

}  // namespace

}  // namespace detail

double iou3d(const OrientedBox3& a, const OrientedBox3& b) {
  detail::require_comparable(a, b);
  const auto ov = detail::upright_overlap(a, b);
  if (ov.union_vol <= 0.0) return 0.0;
  return std::clamp(ov.inter_vol / ov.union_vol, 0.0, 1.0);
}

double giou3d(const OrientedBox3& a, const OrientedBox3& b) {
  detail::require_comparable(a, b);
  const auto ov = detail::upright_overlap(a, b);
  const double iou =
      ov.union_vol > 0.0 ? std::clamp(ov.inter_vol / ov.union_vol, 0.0, 1.0)
                         : 0.0;

  const auto fa = detail::bev_footprint(a);
  const auto fb = detail::bev_footprint(b);
  std::vector<Eigen::Vector2d> pts(fa.begin(), fa.end());
  pts.insert(pts.end(), fb.begin(), fb.end());
  const double hull_area = detail::convex_hull_area(std::move(pts));

  const double z0 = std::min(a.pose.translation.z() - 0.5 * a.scale.sz,
                             b.pose.translation.z() - 0.5 * b.scale.sz);
  const double z1 = std::max(a.pose.translation.z() + 0.5 * a.scale.sz,
                             b.pose.translation.z() + 0.5 * b.scale.sz);
  const double enclosing = hull_area * (z1 - z0);
  if (enclosing <= 0.0) return iou;
  return iou - (enclosing - ov.union_vol) / enclosing;
}

namespace {

// Membership counting state for one box: local = R^T (p - t), inside iff
// |local_i| <= half_i.
struct BoxTester {
  Eigen::Matrix3d rt;
  Eigen::Vector3d t;
  Eigen::Vector3d half;

  explicit BoxTester(const OrientedBox3& b)
      : rt(b.pose.rotation.transpose()),
        t(b.pose.translation),
        half(0.5 * b.scale.vec()) {}

  bool contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d local = rt * (p - t);
    return std::abs(local.x()) <= half.x() &&
           std::abs(local.y()) <= half.y() && std::abs(local.z()) <= half.z();
  }
};

struct VoxelCounts {
  std::int64_t in_a = 0;
  std::int64_t in_b = 0;
  std::int64_t in_both = 0;
};

// Exact count over the same voxel-center lattice, specialised to upright
// boxes where membership factorises into a BEV part and a z part.
VoxelCounts count_upright(const OrientedBox3& a, const OrientedBox3& b,
                          const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                          int res) {
  const Eigen::Vector3d step = (hi - lo) / res;
  const auto fa = detail::bev_footprint(a);
  const auto fb = detail::bev_footprint(b);

  auto in_footprint = [](const std::array<Eigen::Vector2d, 4>& f,
                         const Eigen::Vector2d& q) {
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector2d& p0 = f[i];
      const Eigen::Vector2d& p1 = f[(i + 1) % 4];
      if ((p1.x() - p0.x()) * (q.y() - p0.y()) -
              (p1.y() - p0.y()) * (q.x() - p0.x()) <
          0.0)
        return false;
    }
    return true;
  };

  std::int64_t bev_a = 0, bev_b = 0, bev_both = 0;
  for (int iy = 0; iy < res; ++iy) {
    const double y = lo.y() + (iy + 0.5) * step.y();
    for (int ix = 0; ix < res; ++ix) {
      const Eigen::Vector2d q(lo.x() + (ix + 0.5) * step.x(), y);
      const bool ia = in_footprint(fa, q);
      const bool ib = in_footprint(fb, q);
      bev_a += ia;
      bev_b += ib;
      bev_both += ia && ib;
    }
  }

  const double az0 = a.pose.translation.z() - 0.5 * a.scale.sz;
  const double az1 = a.pose.translation.z() + 0.5 * a.scale.sz;
  const double bz0 = b.pose.translation.z() - 0.5 * b.scale.sz;
  const double bz1 = b.pose.translation.z() + 0.5 * b.scale.sz;
  std::int64_t z_a = 0, z_b = 0, z_both = 0;
  for (int iz = 0; iz < res; ++iz) {
    const double z = lo.z() + (iz + 0.5) * step.z();
    const bool ia = z >= az0 && z <= az1;
    const bool ib = z >= bz0 && z <= bz1;
    z_a += ia;
    z_b += ib;
    z_both += ia && ib;
  }

  VoxelCounts c;
  c.in_a = bev_a * z_a;
  c.in_b = bev_b * z_b;
  c.in_both = bev_both * z_both;
  return c;
}

VoxelCounts count_general(const OrientedBox3& a, const OrientedBox3& b,
                          const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                          int res) {
  const Eigen::Vector3d step = (hi - lo) / res;
  const BoxTester ta(a);
  const BoxTester tb(b);
  VoxelCounts c;
  for (int iz = 0; iz < res; ++iz) {
    const double z = lo.z() + (iz + 0.5) * step.z();
    for (int iy = 0; iy < res; ++iy) {
      const double y = lo.y() + (iy + 0.5) * step.y();
      for (int ix = 0; ix < res; ++ix) {
        const Eigen::Vector3d p(lo.x() + (ix + 0.5) * step.x(), y, z);
        const bool ia = ta.contains(p);
        const bool ib = tb.contains(p);
        c.in_a += ia;
        c.in_b += ib;
        c.in_both += ia && ib;
      }
    }
  }
  return c;
}

}  // namespace

namespace {

void joint_bounds(const OrientedBox3& a, const OrientedBox3& b,
                  Eigen::Vector3d& lo, Eigen::Vector3d& hi) {
  lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& p : corners(a)) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  for (const auto& p : corners(b)) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

void check_voxel_args(const OrientedBox3& a, const OrientedBox3& b,
                      int resolution) {
  if (a.frame != b.frame)
    throw std::invalid_argument("voxel_iou: boxes are in different frames");
  if (resolution < 2)
    throw std::invalid_argument("voxel_iou: resolution must be >= 2");
}

double iou_from_counts(const VoxelCounts& c) {
  const std::int64_t in_union = c.in_a + c.in_b - c.in_both;
  if (in_union == 0) return 0.0;
  return static_cast<double>(c.in_both) / static_cast<double>(in_union);
}

}  // namespace

double voxel_iou(const OrientedBox3& a, const OrientedBox3& b,
                 int resolution) {
  check_voxel_args(a, b, resolution);
  Eigen::Vector3d lo, hi;
  joint_bounds(a, b, lo, hi);
  const VoxelCounts c = (is_upright(a, 1e-9) && is_upright(b, 1e-9))
                            ? count_upright(a, b, lo, hi, resolution)
                            : count_general(a, b, lo, hi, resolution);
  return iou_from_counts(c);
}

namespace detail {

double voxel_iou_general(const OrientedBox3& a, const OrientedBox3& b,
                         int resolution) {
  check_voxel_args(a, b, resolution);
  Eigen::Vector3d lo, hi;
  joint_bounds(a, b, lo, hi);
  return iou_from_counts(count_general(a, b, lo, hi, resolution));
}

}  // namespace detail

Eigen::Vector2d project_point(const CameraIntrinsics& k,
                              const Eigen::Vector3d& p_cam) {
  if (p_cam.z() <= 0.0)
    throw std::domain_error("project_point: point is behind the camera");
  return {k.fx * p_cam.x() / p_cam.z() + k.cx,
          k.fy * p_cam.y() / p_cam.z() + k.cy};
}

std::optional<Box2> project_bbox(
    const CameraIntrinsics& k, const Pose& t_cw,
    const std::vector<Eigen::Vector3d>& points_w) {
  Box2 box{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& pw : points_w) {
    const Eigen::Vector3d pc = t_cw.apply(pw);
    if (pc.z() <= 0.0) continue;
    const Eigen::Vector2d px = project_point(k, pc);
    box.xmin = std::min(box.xmin, px.x());
    box.ymin = std::min(box.ymin, px.y());
    box.xmax = std::max(box.xmax, px.x());
    box.ymax = std::max(box.ymax, px.y());
    any = true;
  }
  if (!any) return std::nullopt;
  return box;
}

}  // namespace motrec
