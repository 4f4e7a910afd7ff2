#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "motrec/geometry.hpp"

using namespace motrec;

namespace {

constexpr double kPi = 3.14159265358979323846;

OrientedBox3 make_box(double x, double y, double z, double sx, double sy,
                      double sz, double yaw = 0.0,
                      Frame frame = Frame::kWorld) {
  OrientedBox3 b;
  b.pose.rotation = rot_z(yaw);
  b.pose.translation = {x, y, z};
  b.scale = {sx, sy, sz};
  b.frame = frame;
  return b;
}

OrientedBox3 random_upright_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> ext(0.4, 2.5);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  return make_box(pos(rng), pos(rng), pos(rng), ext(rng), ext(rng), ext(rng),
                  yaw(rng));
}

}  // namespace

TEST_CASE("compose and inverse") {
  const Pose id = Pose::identity();
  CHECK((compose(id, id).rotation - Eigen::Matrix3d::Identity()).norm() ==
        doctest::Approx(0.0));
  CHECK(compose(id, id).translation.norm() == doctest::Approx(0.0));

  Pose p;
  p.rotation = rot_z(0.7) * rot_y(-0.3) * rot_x(1.1);
  p.translation = {1.5, -2.0, 0.25};
  const Pose round = compose(p, inverse(p));
  CHECK((round.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
        1e-9);
  CHECK(round.translation.cwiseAbs().maxCoeff() < 1e-9);

  Pose a;
  a.rotation = rot_z(kPi / 2.0);
  a.translation = {1.0, 0.0, 0.0};
  Pose b;
  b.rotation = rot_z(kPi / 2.0);
  const Pose c = compose(a, b);
  CHECK((c.rotation - rot_z(kPi)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c.translation - Eigen::Vector3d(1.0, 0.0, 0.0)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(is_orthonormal(c.rotation));
}

TEST_CASE("corners: ordering, centroid, symmetry") {
  const OrientedBox3 unit = make_box(0, 0, 0, 1, 1, 1);
  const auto pts = corners(unit);
  REQUIRE(pts.size() == 8);
  // Lexicographic over signs, - before +: first corner is (-,-,-).
  CHECK(pts[0].isApprox(Eigen::Vector3d(-0.5, -0.5, -0.5)));
  CHECK(pts[7].isApprox(Eigen::Vector3d(0.5, 0.5, 0.5)));
  CHECK(pts[1].isApprox(Eigen::Vector3d(-0.5, -0.5, 0.5)));

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= 8.0;
  CHECK(centroid.cwiseAbs().maxCoeff() < 1e-9);

  const auto wide = corners(make_box(0, 0, 0, 2, 1, 1));
  double max_x = 0.0;
  for (const auto& p : wide) max_x = std::max(max_x, std::abs(p.x()));
  CHECK(max_x == doctest::Approx(1.0));

  // Yaw 90 permutes the corner set of a cube but leaves the set unchanged.
  const auto rotated = corners(make_box(0, 0, 0, 1, 1, 1, kPi / 2.0));
  for (const auto& r : rotated) {
    bool found = false;
    for (const auto& p : pts)
      if ((r - p).norm() < 1e-9) found = true;
    CHECK(found);
  }

  const OrientedBox3 shifted = make_box(3.0, -1.0, 2.0, 1.4, 0.8, 2.2, 0.6);
  Eigen::Vector3d c2 = Eigen::Vector3d::Zero();
  for (const auto& p : corners(shifted)) c2 += p;
  c2 /= 8.0;
  CHECK((c2 - shifted.pose.translation).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("iou2d") {
  const Box2 a{0, 0, 2, 2};
  CHECK(iou2d(a, a) == doctest::Approx(1.0));
  CHECK(iou2d(a, Box2{3, 3, 5, 5}) == doctest::Approx(0.0));
  CHECK(iou2d(a, Box2{1, 0, 3, 2}) == doctest::Approx(2.0 / 6.0));
  CHECK(iou2d(Box2{0, 0, 0, 0}, a) == doctest::Approx(0.0));
}

TEST_CASE("iou3d exact path") {
  const OrientedBox3 a = make_box(0, 0, 0, 1, 1, 1);
  CHECK(iou3d(a, a) == doctest::Approx(1.0));
  CHECK(iou3d(a, make_box(0.5, 0, 0, 1, 1, 1)) == doctest::Approx(1.0 / 3.0));
  CHECK(iou3d(a, make_box(2.0, 0, 0, 1, 1, 1)) == doctest::Approx(0.0));

  OrientedBox3 cam = a;
  cam.frame = Frame::kCamera;
  CHECK_THROWS_AS(iou3d(a, cam), std::invalid_argument);

  OrientedBox3 tilted = a;
  tilted.pose.rotation = rot_y(0.3);
  CHECK_THROWS_AS(iou3d(a, tilted), std::invalid_argument);
}

TEST_CASE("giou3d hand cases") {
  const OrientedBox3 a = make_box(0, 0, 0, 1, 1, 1);
  CHECK(giou3d(a, a) == doctest::Approx(1.0));
  // Offset 0.5: enclosing hull equals the union bounding box, no slack.
  CHECK(giou3d(a, make_box(0.5, 0, 0, 1, 1, 1)) == doctest::Approx(1.0 / 3.0));
  // Offset 3: |C| = 4, union 2, IoU 0 -> -0.5.
  CHECK(giou3d(a, make_box(3.0, 0, 0, 1, 1, 1)) == doctest::Approx(-0.5));
}

TEST_CASE("giou3d/iou3d properties over random upright pairs") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 200; ++it) {
    const OrientedBox3 a = random_upright_box(rng);
    const OrientedBox3 b = random_upright_box(rng);
    const double iou = iou3d(a, b);
    const double giou = giou3d(a, b);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(giou <= iou + 1e-12);
    CHECK(giou > -1.0);
    CHECK(std::abs(giou - giou3d(b, a)) < 1e-9);
    CHECK(std::abs(iou - iou3d(b, a)) < 1e-9);
    CHECK(giou3d(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("rigid invariance of iou3d and giou3d") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int it = 0; it < 50; ++it) {
    const OrientedBox3 a = random_upright_box(rng);
    const OrientedBox3 b = random_upright_box(rng);
    Pose g;
    g.rotation = rot_z(yaw(rng));
    g.translation = {shift(rng), shift(rng), shift(rng)};
    OrientedBox3 ga = a, gb = b;
    ga.pose = compose(g, a.pose);
    gb.pose = compose(g, b.pose);
    CHECK(std::abs(iou3d(a, b) - iou3d(ga, gb)) < 1e-6);
    CHECK(std::abs(giou3d(a, b) - giou3d(ga, gb)) < 1e-6);
  }
}

TEST_CASE("voxel oracle agrees with the exact path") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int it = 0; it < 12; ++it) {
    const OrientedBox3 a = random_upright_box(rng);
    const OrientedBox3 b = random_upright_box(rng);
    const double exact = iou3d(a, b);
    const double voxel = voxel_iou(a, b, 128);
    CHECK(std::abs(exact - voxel) < 0.02);
    ++checked;
  }
  CHECK(checked == 12);
}

TEST_CASE("voxel_iou factorised path matches the triple loop") {
  std::mt19937_64 rng(53);
  for (int it = 0; it < 8; ++it) {
    const OrientedBox3 a = random_upright_box(rng);
    const OrientedBox3 b = random_upright_box(rng);
    const double fast = voxel_iou(a, b, 32);
    const double slow = detail::voxel_iou_general(a, b, 32);
    CHECK(fast == slow);
  }
  // Arbitrary rotations go through the general path without error.
  OrientedBox3 a = make_box(0, 0, 0, 1, 2, 1);
  OrientedBox3 b = make_box(0.3, 0.1, 0.2, 1, 1, 1.5);
  b.pose.rotation = rot_y(0.4) * rot_x(-0.2);
  const double v = voxel_iou(a, b, 64);
  CHECK(v > 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("gravity_aligned and is_upright") {
  OrientedBox3 b = make_box(1, 2, 3, 1, 1, 1);
  b.pose.rotation = rot_z(0.8) * rot_y(0.1);
  CHECK_FALSE(is_upright(b, 1e-9));
  const OrientedBox3 g = gravity_aligned(b);
  CHECK(is_upright(g, 1e-9));
  CHECK(yaw_of(g.pose.rotation) == doctest::Approx(yaw_of(b.pose.rotation)));
  CHECK(g.pose.translation.isApprox(b.pose.translation));

  const OrientedBox3 pure = make_box(0, 0, 0, 1, 1, 1, 0.8);
  const OrientedBox3 g2 = gravity_aligned(pure);
  CHECK((g2.pose.rotation - pure.pose.rotation).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_point") {
  const CameraIntrinsics k{500, 500, 320, 240};
  const Eigen::Vector2d on_axis = project_point(k, {0, 0, 2});
  CHECK(on_axis.x() == doctest::Approx(320.0));
  CHECK(on_axis.y() == doctest::Approx(240.0));

  const Eigen::Vector2d off = project_point(k, {1, 0, 5});
  CHECK(off.x() == doctest::Approx(420.0));
  CHECK(off.y() == doctest::Approx(240.0));

  CHECK_THROWS_AS(project_point(k, {0, 0, -1}), std::domain_error);
  CHECK_THROWS_AS(project_point(k, {0, 0, 0}), std::domain_error);
}

TEST_CASE("project_bbox") {
  const CameraIntrinsics k{500, 500, 320, 240};
  const Pose id = Pose::identity();

  const auto degenerate = project_bbox(k, id, {{0, 0, 3}});
  REQUIRE(degenerate.has_value());
  CHECK(degenerate->xmin == doctest::Approx(320.0));
  CHECK(degenerate->xmax == doctest::Approx(320.0));
  CHECK(degenerate->ymin == doctest::Approx(240.0));

  OrientedBox3 cube = make_box(0, 0, 4, 1, 1, 1, 0.0, Frame::kCamera);
  const auto pts = corners(cube);
  const auto box = project_bbox(k, id, {pts.begin(), pts.end()});
  REQUIRE(box.has_value());
  // Near face at z=3.5 dominates: 320 +- 500*0.5/3.5.
  CHECK(box->xmin == doctest::Approx(248.57142857142858));
  CHECK(box->xmax == doctest::Approx(391.42857142857144));
  CHECK(box->ymin == doctest::Approx(168.57142857142858));
  CHECK(box->ymax == doctest::Approx(311.42857142857144));

  CHECK_FALSE(project_bbox(k, id, {{0, 0, -3}, {1, 1, -2}}).has_value());
}
