#pragma once

#include "evdet3d/boxes.hpp"
#include "evdet3d/events.hpp"
#include "evdet3d/fusion.hpp"
#include "evdet3d/geometry.hpp"
#include "evdet3d/metrics.hpp"
#include "evdet3d/voxel.hpp"

#include <cstdint>
#include <vector>

namespace evdet {

// Constant-velocity, constant-yaw-rate motion over one frame interval, so
// the true box-local motion at any t is closed-form.
struct ScenarioBox {
  Box3D box;                       // pose at t = 0
  Vec3 velocity{Vec3::Zero()};     // meters per interval
  double yaw_rate{0.0};            // radians per interval
  ObjectClass class_id{ObjectClass::vehicle};
};

struct ScenarioSpec {
  std::uint64_t seed{7};
  std::vector<ScenarioBox> boxes;
  int points_per_box{400};
  double events_per_unit_motion{1500.0};  // per box, per meter of motion
  CameraModel camera;
  double point_jitter{0.01};          // meters
  double event_pixel_jitter{0.5};     // pixels
  double proposal_center_jitter{0.0}; // meters
  int gt_steps{10};                   // ground truth at t = k / gt_steps

  static ScenarioSpec default_spec();
};

struct ScenarioData {
  PointCloud points_t0;
  PointCloud points_t1;  // future active timestamp, offline-only data
  EventStream events;    // over [0, 1)
  std::vector<LabeledBox> ground_truth;  // per gt step, track_id set
  std::vector<BoxProposal> proposals;    // at t = 0, score 1
};

Box3D box_at_time(const ScenarioBox& sb, double t);
MotionVector true_motion(const ScenarioBox& sb, double t);

// Deterministic under spec.seed: surface points at the active timestamps,
// wireframe-silhouette events with timestamps uniform in the motion, dense
// ground truth, and (optionally perturbed) proposals.
ScenarioData generate(const ScenarioSpec& spec);

}  // namespace evdet
