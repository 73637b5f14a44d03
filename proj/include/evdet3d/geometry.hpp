#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace evdet {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

// Unit quaternion, (w, x, y, z) ordering, Hamilton product, right-handed.
// Every constructor normalizes and canonicalizes the sign so that w >= 0.
struct Quaternion {
  double w{1.0}, x{0.0}, y{0.0}, z{0.0};

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_);

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  static Quaternion from_yaw(double yaw);  // rotation about +z
  static Quaternion from_rotation_matrix(const Mat3& r);

  double norm() const;
  double dot(const Quaternion& q) const;
  Quaternion conjugate() const;
  Quaternion operator*(const Quaternion& q) const;
  Vec3 rotate(const Vec3& v) const;
  Mat3 to_rotation_matrix() const;

  // Geodesic rotation angle to q, in [0, pi].
  double angle_to(const Quaternion& q) const;
  // Yaw of the rotated +x axis; exact inverse of from_yaw for z-rotations.
  double yaw() const;
};

// Shorter-geodesic spherical interpolation. Falls back to normalized linear
// interpolation when |dot| > 1 - 1e-7. Inputs must be unit within 1e-6.
Quaternion slerp(const Quaternion& q0, const Quaternion& q1, double t);

struct Pose {
  Vec3 position{Vec3::Zero()};
  Quaternion orientation{};
};

Pose pose_interpolate(const Pose& x0, const Pose& x1, double t);

// SE(3) element; rotation is validated orthonormal with det +1.
struct RigidTransform {
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};

  RigidTransform() = default;
  RigidTransform(const Mat3& r, const Vec3& t);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_pose(const Pose& p);
  static RigidTransform from_translation(const Vec3& t);
  static RigidTransform rotation_z(double angle);
};

RigidTransform transform_compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform transform_invert(const RigidTransform& a);
Vec3 transform_apply(const RigidTransform& a, const Vec3& p);

// Pinhole camera. The extrinsic maps LiDAR/world coordinates into the
// camera frame (+z forward, +x right, +y down).
struct CameraModel {
  double fx{1.0}, fy{1.0}, cx{0.0}, cy{0.0};
  RigidTransform extrinsic{};
  int width{0}, height{0};

  CameraModel() = default;
  CameraModel(double fx_, double fy_, double cx_, double cy_,
              const RigidTransform& extrinsic_, int width_, int height_);

  Mat3 intrinsic_matrix() const;
};

struct Projection {
  Vec2 pixel;
  double depth;  // camera-frame z, meters
};

// Perspective projection with division by camera-frame depth. Throws
// std::domain_error if the point is not in front of the camera (z <= 1e-6).
Projection project_point(const CameraModel& cam, const Vec3& p_world);
// Same, but returns nullopt instead of throwing.
std::optional<Projection> try_project_point(const CameraModel& cam, const Vec3& p_world);

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace evdet
