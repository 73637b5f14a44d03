#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evdet3d/geometry.hpp"

#include <cmath>
#include <random>

using namespace evdet;

namespace {
constexpr double kPi = 3.14159265358979323846;

Quaternion random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  return Quaternion(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
}

double rotation_distance(const Quaternion& a, const Quaternion& b) {
  return (a.to_rotation_matrix() - b.to_rotation_matrix()).norm();
}
}  // namespace

TEST_CASE("quaternion construction normalizes and canonicalizes") {
  const Quaternion q(2.0, 0.0, 0.0, 0.0);
  CHECK(q.w == doctest::Approx(1.0).epsilon(1e-12));
  const Quaternion flipped(-0.5, 0.1, 0.2, 0.3);
  CHECK(flipped.w >= 0.0);
  CHECK(std::abs(flipped.norm() - 1.0) < 1e-9);
  CHECK_THROWS_AS(Quaternion(0.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("slerp endpoints and fixed examples") {
  const Quaternion id = Quaternion::identity();
  const Quaternion z90 = Quaternion::from_yaw(kPi / 2.0);

  CHECK(rotation_distance(slerp(id, id, 0.7), id) < 1e-12);

  const Quaternion mid = slerp(id, z90, 0.5);
  CHECK(rotation_distance(mid, Quaternion::from_yaw(kPi / 4.0)) < 1e-12);

  // Oracle: fractional power of the rotation matrix, i.e. the axis-angle
  // rotation at a quarter of the angle.
  const Quaternion quarter = slerp(id, z90, 0.25);
  const Mat3 oracle = Eigen::AngleAxisd(0.25 * kPi / 2.0, Vec3::UnitZ()).toRotationMatrix();
  CHECK((quarter.to_rotation_matrix() - oracle).norm() < 1e-12);
}

TEST_CASE("slerp rejects bad arguments") {
  const Quaternion id = Quaternion::identity();
  CHECK_THROWS_AS(slerp(id, id, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(slerp(id, id, -0.1), std::invalid_argument);
}

TEST_CASE("slerp properties over random pairs") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 200; ++i) {
    const Quaternion q0 = random_unit_quat(rng);
    const Quaternion q1 = random_unit_quat(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double t = unit(rng);

    CHECK(rotation_distance(slerp(q0, q1, 0.0), q0) < 1e-9);
    CHECK(rotation_distance(slerp(q0, q1, 1.0), q1) < 1e-9);

    const Quaternion qt = slerp(q0, q1, t);
    CHECK(std::abs(qt.norm() - 1.0) < 1e-9);

    // Angle from q0 grows linearly along the geodesic.
    const double total = q0.angle_to(q1);
    CHECK(std::abs(qt.angle_to(q0) - t * total) < 1e-7);
  }
}

TEST_CASE("pose interpolation") {
  const Pose a{Vec3(0, 0, 0), Quaternion::identity()};
  const Pose b{Vec3(2, 0, 0), Quaternion::identity()};
  const Pose at0 = pose_interpolate(a, b, 0.0);
  CHECK(at0.position == a.position);

  const Pose mid = pose_interpolate(a, b, 0.5);
  CHECK((mid.position - Vec3(1, 0, 0)).norm() < 1e-12);

  const Pose c{Vec3(4, 2, 0), Quaternion::from_yaw(kPi / 2.0)};
  const Pose halfway = pose_interpolate(a, c, 0.5);
  CHECK((halfway.position - Vec3(2, 1, 0)).norm() < 1e-12);
  CHECK(rotation_distance(halfway.orientation, Quaternion::from_yaw(kPi / 4.0)) < 1e-12);
}

TEST_CASE("rigid transform algebra") {
  CHECK((transform_invert(RigidTransform::identity()).rotation - Mat3::Identity()).norm() < 1e-12);

  const RigidTransform shift = RigidTransform::from_translation(Vec3(1, 2, 3));
  CHECK((transform_apply(shift, Vec3(0, 0, 0)) - Vec3(1, 2, 3)).norm() < 1e-12);

  const RigidTransform z90 = RigidTransform::rotation_z(kPi / 2.0);
  const Vec3 rotated = transform_apply(transform_compose(z90, z90), Vec3(1, 0, 0));
  CHECK((rotated - Vec3(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("transform round trip on random inputs") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Quaternion q = random_unit_quat(rng);
    RigidTransform t(q.to_rotation_matrix(), Vec3(gauss(rng), gauss(rng), gauss(rng)));
    const Vec3 p(gauss(rng), gauss(rng), gauss(rng));
    const Vec3 back = transform_apply(transform_invert(t), transform_apply(t, p));
    CHECK((back - p).norm() < 1e-9);
    const RigidTransform should_be_id = transform_compose(t, transform_invert(t));
    CHECK((should_be_id.rotation - Mat3::Identity()).norm() < 1e-9);
    CHECK(should_be_id.translation.norm() < 1e-9);
  }
}

TEST_CASE("rigid transform rejects non-orthonormal rotations") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(RigidTransform(bad, Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("pinhole projection examples") {
  const CameraModel plain(1.0, 1.0, 0.0, 0.0, RigidTransform::identity(), 640, 480);
  const Projection p1 = project_point(plain, Vec3(2, 4, 2));
  CHECK(p1.pixel.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p1.pixel.y() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p1.depth == doctest::Approx(2.0).epsilon(1e-12));

  const Projection axis = project_point(plain, Vec3(0, 0, 5));
  CHECK(axis.pixel.norm() < 1e-12);
  CHECK(axis.depth == doctest::Approx(5.0));

  // Hand-derived: camera point (0.5, 0, 2) -> (100 * 0.25 + 160, 120), depth 2.
  const CameraModel cam(100.0, 100.0, 160.0, 120.0,
                        RigidTransform::from_translation(Vec3(0, 0, 1)), 320, 240);
  const Projection p2 = project_point(cam, Vec3(0.5, 0, 1));
  CHECK(p2.pixel.x() == doctest::Approx(185.0).epsilon(1e-12));
  CHECK(p2.pixel.y() == doctest::Approx(120.0).epsilon(1e-12));
  CHECK(p2.depth == doctest::Approx(2.0));
}

TEST_CASE("projection rejects points behind the camera") {
  const CameraModel cam(1.0, 1.0, 0.0, 0.0, RigidTransform::identity(), 64, 64);
  CHECK_THROWS_AS(project_point(cam, Vec3(0, 0, -1)), std::domain_error);
  CHECK_THROWS_AS(project_point(cam, Vec3(0, 0, 0)), std::domain_error);
  CHECK_FALSE(try_project_point(cam, Vec3(0, 0, -1)).has_value());
}

TEST_CASE("projection is scale covariant in depth") {
  const CameraModel cam(123.0, 77.0, 32.0, 16.0, RigidTransform::identity(), 64, 64);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.1, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(unit(rng) - 2.5, unit(rng) - 2.5, unit(rng));
    const double s = unit(rng);
    const Projection a = project_point(cam, p);
    const Projection b = project_point(cam, s * p);
    CHECK((a.pixel - b.pixel).norm() < 1e-9);
  }
}

TEST_CASE("camera model validation") {
  CHECK_THROWS_AS(CameraModel(0.0, 1.0, 0.0, 0.0, RigidTransform::identity(), 64, 64),
                  std::invalid_argument);
  CHECK_THROWS_AS(CameraModel(1.0, 1.0, 0.0, 0.0, RigidTransform::identity(), 0, 64),
                  std::invalid_argument);
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wide(-50.0, 50.0);
  for (int i = 0; i < 500; ++i) {
    const double a = wide(rng);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::remainder(a - w, 2.0 * kPi)) < 1e-9);
  }
}
