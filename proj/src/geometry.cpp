#include "evdet3d/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace evdet {

namespace {
constexpr double kPi = 3.14159265358979323846;

void canonicalize(double& w, double& x, double& y, double& z) {
  if (w < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  w += 0.0;  // flush -0.0
}
}  // namespace

Quaternion::Quaternion(double w_, double x_, double y_, double z_) {
  const double n = std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
  if (!(n > 1e-12)) {
    throw std::invalid_argument("Quaternion: near-zero norm");
  }
  w = w_ / n;
  x = x_ / n;
  y = y_ / n;
  z = z_ / n;
  canonicalize(w, x, y, z);
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 1e-12)) {
    throw std::invalid_argument("from_axis_angle: near-zero axis");
  }
  const Vec3 u = axis / n;
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return Quaternion(std::cos(h), u.x() * s, u.y() * s, u.z() * s);
}

Quaternion Quaternion::from_yaw(double yaw) {
  return from_axis_angle(Vec3::UnitZ(), yaw);
}

Quaternion Quaternion::from_rotation_matrix(const Mat3& r) {
  // Shepperd's method; the constructor renormalizes.
  const double tr = r.trace();
  double w_, x_, y_, z_;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    w_ = 0.25 * s;
    x_ = (r(2, 1) - r(1, 2)) / s;
    y_ = (r(0, 2) - r(2, 0)) / s;
    z_ = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    w_ = (r(2, 1) - r(1, 2)) / s;
    x_ = 0.25 * s;
    y_ = (r(0, 1) + r(1, 0)) / s;
    z_ = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    w_ = (r(0, 2) - r(2, 0)) / s;
    x_ = (r(0, 1) + r(1, 0)) / s;
    y_ = 0.25 * s;
    z_ = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    w_ = (r(1, 0) - r(0, 1)) / s;
    x_ = (r(0, 2) + r(2, 0)) / s;
    y_ = (r(1, 2) + r(2, 1)) / s;
    z_ = 0.25 * s;
  }
  return Quaternion(w_, x_, y_, z_);
}

double Quaternion::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

double Quaternion::dot(const Quaternion& q) const {
  return w * q.w + x * q.x + y * q.y + z * q.z;
}

Quaternion Quaternion::conjugate() const {
  Quaternion q;
  q.w = w;
  q.x = -x;
  q.y = -y;
  q.z = -z;
  canonicalize(q.w, q.x, q.y, q.z);
  return q;
}

Quaternion Quaternion::operator*(const Quaternion& q) const {
  return Quaternion(w * q.w - x * q.x - y * q.y - z * q.z,
                    w * q.x + x * q.w + y * q.z - z * q.y,
                    w * q.y - x * q.z + y * q.w + z * q.x,
                    w * q.z + x * q.y - y * q.x + z * q.w);
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  const Vec3 u(x, y, z);
  const Vec3 t = 2.0 * u.cross(v);
  return v + w * t + u.cross(t);
}

Mat3 Quaternion::to_rotation_matrix() const {
  Mat3 r;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  const double wx = w * x, wy = w * y, wz = w * z;
  r << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
       2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
       2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
  return r;
}

double Quaternion::angle_to(const Quaternion& q) const {
  const double d = std::min(1.0, std::abs(dot(q)));
  return 2.0 * std::acos(d);
}

double Quaternion::yaw() const {
  const Vec3 v = rotate(Vec3::UnitX());
  return std::atan2(v.y(), v.x());
}

Quaternion slerp(const Quaternion& q0, const Quaternion& q1, double t) {
  if (std::abs(q0.norm() - 1.0) > 1e-6 || std::abs(q1.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("slerp: inputs must be unit quaternions");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("slerp: t must be in [0, 1]");
  }
  double d = q0.dot(q1);
  double sign = 1.0;
  if (d < 0.0) {  // take the shorter geodesic
    d = -d;
    sign = -1.0;
  }
  double a, b;
  if (d > 1.0 - 1e-7) {
    a = 1.0 - t;
    b = t;
  } else {
    const double theta = std::acos(std::min(d, 1.0));
    const double s = std::sin(theta);
    a = std::sin((1.0 - t) * theta) / s;
    b = std::sin(t * theta) / s;
  }
  b *= sign;
  return Quaternion(a * q0.w + b * q1.w, a * q0.x + b * q1.x,
                    a * q0.y + b * q1.y, a * q0.z + b * q1.z);
}

Pose pose_interpolate(const Pose& x0, const Pose& x1, double t) {
  Pose p;
  p.position = (1.0 - t) * x0.position + t * x1.position;
  p.orientation = slerp(x0.orientation, x1.orientation, t);
  return p;
}

RigidTransform::RigidTransform(const Mat3& r, const Vec3& t)
    : rotation(r), translation(t) {
  const double ortho = (r * r.transpose() - Mat3::Identity()).norm();
  if (ortho > 1e-9 || r.determinant() < 0.0) {
    throw std::invalid_argument("RigidTransform: rotation not orthonormal");
  }
}

RigidTransform RigidTransform::from_pose(const Pose& p) {
  RigidTransform t;
  t.rotation = p.orientation.to_rotation_matrix();
  t.translation = p.position;
  return t;
}

RigidTransform RigidTransform::from_translation(const Vec3& t) {
  RigidTransform r;
  r.translation = t;
  return r;
}

RigidTransform RigidTransform::rotation_z(double angle) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
  return t;
}

RigidTransform transform_compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

RigidTransform transform_invert(const RigidTransform& a) {
  RigidTransform inv;
  inv.rotation = a.rotation.transpose();
  inv.translation = -(inv.rotation * a.translation);
  return inv;
}

Vec3 transform_apply(const RigidTransform& a, const Vec3& p) {
  return a.rotation * p + a.translation;
}

CameraModel::CameraModel(double fx_, double fy_, double cx_, double cy_,
                         const RigidTransform& extrinsic_, int width_, int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), extrinsic(extrinsic_),
      width(width_), height(height_) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("CameraModel: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("CameraModel: image size must be positive");
  }
}

Mat3 CameraModel::intrinsic_matrix() const {
  Mat3 k;
  k << fx, 0, cx,
       0, fy, cy,
       0, 0, 1;
  return k;
}

Projection project_point(const CameraModel& cam, const Vec3& p_world) {
  auto p = try_project_point(cam, p_world);
  if (!p) {
    throw std::domain_error("project_point: point behind camera");
  }
  return *p;
}

std::optional<Projection> try_project_point(const CameraModel& cam, const Vec3& p_world) {
  const Vec3 q = transform_apply(cam.extrinsic, p_world);
  if (!(q.z() > 1e-6)) {
    return std::nullopt;
  }
  const Vec3 h = cam.intrinsic_matrix() * q;
  return Projection{Vec2(h.x() / q.z(), h.y() / q.z()), q.z()};
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

}  // namespace evdet
