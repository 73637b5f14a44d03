#pragma once

#include "evdet3d/boxes.hpp"
#include "evdet3d/geometry.hpp"
#include "evdet3d/voxel.hpp"

#include <span>
#include <string>
#include <vector>

namespace evdet {

struct AnnotationKeyframe {
  double t{0.0};
  Box3D box;
  ObjectClass class_id{ObjectClass::vehicle};
};

// One object's keyframes at the low-rate annotation cadence, strictly
// increasing in time.
struct TrackedAnnotation {
  std::string track_id;
  std::vector<AnnotationKeyframe> keyframes;
};

// Densify each keyframe interval at fractions j/subdivisions (plus the final
// keyframe): center and dims linear, yaw via quaternion SLERP about +z.
// A single keyframe passes through unchanged with a warning on stderr.
std::vector<AnnotationKeyframe> interpolate_annotations(const TrackedAnnotation& track,
                                                        int subdivisions);

// Nearest-time source selection; ties go to t1.
double select_nearest_source(double t, double t0, double t1);

struct TimedPointCloud {
  PointCloud cloud;
  double timestamp{0.0};
  Pose pose;  // sensor in world
};

// P_t = T_t^{-1} * T_source applied to every point.
PointCloud sync_pointcloud_to_time(const TimedPointCloud& source, const Pose& x_t);

// Interpolate the sensor pose at t between the straddling clouds, pick the
// nearer cloud, and re-express it at the interpolated pose.
PointCloud sync_to_image_time(double t, const TimedPointCloud& c0, const TimedPointCloud& c1);

// Drop boxes containing fewer than min_points cloud points (inclusive box
// bounds) or centered farther than max_range from the origin.
std::vector<AnnotationKeyframe> filter_annotations(std::span<const AnnotationKeyframe> annos,
                                                   const PointCloud& cloud,
                                                   double max_range = 50.0,
                                                   int min_points = 2);

}  // namespace evdet
