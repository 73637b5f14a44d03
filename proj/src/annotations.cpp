#include "evdet3d/annotations.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace evdet {

std::vector<AnnotationKeyframe> interpolate_annotations(const TrackedAnnotation& track,
                                                        int subdivisions) {
  if (subdivisions < 1) {
    throw std::invalid_argument("interpolate_annotations: subdivisions must be >= 1");
  }
  for (std::size_t k = 1; k < track.keyframes.size(); ++k) {
    if (!(track.keyframes[k - 1].t < track.keyframes[k].t)) {
      throw std::invalid_argument("interpolate_annotations: keyframes not strictly increasing");
    }
  }
  if (track.keyframes.size() < 2) {
    std::cerr << "warning: track " << track.track_id
              << " has fewer than two keyframes; passing through\n";
    return track.keyframes;
  }
  std::vector<AnnotationKeyframe> dense;
  dense.reserve((track.keyframes.size() - 1) * static_cast<std::size_t>(subdivisions) + 1);
  for (std::size_t k = 0; k + 1 < track.keyframes.size(); ++k) {
    const AnnotationKeyframe& a = track.keyframes[k];
    const AnnotationKeyframe& b = track.keyframes[k + 1];
    const Quaternion qa = Quaternion::from_yaw(a.box.yaw);
    const Quaternion qb = Quaternion::from_yaw(b.box.yaw);
    for (int j = 0; j < subdivisions; ++j) {
      if (j == 0) {
        dense.push_back(a);  // keyframes pass through bit-exact
        continue;
      }
      const double f = static_cast<double>(j) / subdivisions;
      AnnotationKeyframe kf;
      kf.t = a.t + (b.t - a.t) * f;
      kf.class_id = a.class_id;
      kf.box = Box3D((1.0 - f) * a.box.center + f * b.box.center,
                     (1.0 - f) * a.box.dims + f * b.box.dims,
                     slerp(qa, qb, f).yaw());
      dense.push_back(kf);
    }
  }
  dense.push_back(track.keyframes.back());
  return dense;
}

double select_nearest_source(double t, double t0, double t1) {
  if (!(t0 < t1)) {
    throw std::invalid_argument("select_nearest_source: need t0 < t1");
  }
  return std::abs(t - t0) < std::abs(t - t1) ? t0 : t1;
}

PointCloud sync_pointcloud_to_time(const TimedPointCloud& source, const Pose& x_t) {
  const RigidTransform t_target = RigidTransform::from_pose(x_t);
  const RigidTransform t_source = RigidTransform::from_pose(source.pose);
  const RigidTransform rel = transform_compose(transform_invert(t_target), t_source);
  PointCloud out;
  out.points.reserve(source.cloud.points.size());
  for (const Vec3& p : source.cloud.points) {
    out.points.push_back(transform_apply(rel, p));
  }
  out.intensity = source.cloud.intensity;
  return out;
}

PointCloud sync_to_image_time(double t, const TimedPointCloud& c0, const TimedPointCloud& c1) {
  if (!(c0.timestamp < c1.timestamp)) {
    throw std::invalid_argument("sync_to_image_time: clouds must be time-ordered");
  }
  if (!(t >= c0.timestamp && t <= c1.timestamp)) {
    throw std::invalid_argument("sync_to_image_time: t outside the straddling interval");
  }
  const double f = (t - c0.timestamp) / (c1.timestamp - c0.timestamp);
  const Pose x_t = pose_interpolate(c0.pose, c1.pose, f);
  const double source_t = select_nearest_source(t, c0.timestamp, c1.timestamp);
  const TimedPointCloud& source = (source_t == c0.timestamp) ? c0 : c1;
  return sync_pointcloud_to_time(source, x_t);
}

std::vector<AnnotationKeyframe> filter_annotations(std::span<const AnnotationKeyframe> annos,
                                                   const PointCloud& cloud,
                                                   double max_range, int min_points) {
  std::vector<AnnotationKeyframe> kept;
  for (const auto& anno : annos) {
    if (anno.box.center.norm() > max_range) {
      continue;
    }
    int inside = 0;
    for (const Vec3& p : cloud.points) {
      if (point_in_box(anno.box, p)) {
        ++inside;
        if (inside >= min_points) {
          break;
        }
      }
    }
    if (inside < min_points) {
      continue;
    }
    kept.push_back(anno);
  }
  return kept;
}

}  // namespace evdet
