#pragma once

#include "evdet3d/geometry.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace evdet {

enum class ObjectClass { vehicle, pedestrian, cyclist };

std::string to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string& s);

// Oriented 3D box: center, (length, width, height), yaw about +z wrapped to
// (-pi, pi]. The box local frame has +x along the length.
struct Box3D {
  Vec3 center{Vec3::Zero()};
  Vec3 dims{Vec3::Ones()};
  double yaw{0.0};

  Box3D() = default;
  Box3D(const Vec3& center_, const Vec3& dims_, double yaw_);

  double volume() const { return dims.x() * dims.y() * dims.z(); }
};

struct BoxProposal {
  Box3D box;
  ObjectClass class_id{ObjectClass::vehicle};
  double score{1.0};
  int track_id{-1};  // optional provenance tag used by the dataset tooling
};

// Corner k has local signs (sx, sy, sz) = (k&1 ? + : -, k&2 ? + : -, k&4 ? + : -)
// applied to dims/2, rotated by yaw and translated to center.
std::array<Vec3, 8> box_corners(const Box3D& b);

Vec3 world_to_box_local(const Box3D& b, const Vec3& p);
Vec3 box_local_to_world(const Box3D& b, const Vec3& p);
bool point_in_box(const Box3D& b, const Vec3& p);  // inclusive bounds

// Rotated-rectangle overlap in the ground plane via convex polygon clipping.
double iou_bev(const Box3D& a, const Box3D& b);
// BEV intersection area times vertical overlap over the volume union.
double iou_3d(const Box3D& a, const Box3D& b);
double intersection_volume(const Box3D& a, const Box3D& b);

// Greedy descending-score suppression by 3D IoU; score ties keep the lower
// input index first.
std::vector<BoxProposal> nms(std::span<const BoxProposal> proposals,
                             double iou_threshold, bool per_class);

}  // namespace evdet
