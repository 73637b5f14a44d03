#include "evdet3d/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evdet {

namespace {
constexpr double kClipEps = 1e-9;

struct Poly {
  // Convex polygon, CCW. Fixed capacity is enough for rect/rect clipping.
  std::array<Vec2, 16> pts;
  int n{0};

  void push(const Vec2& p) { pts[n++] = p; }
};

double polygon_area(const Poly& poly) {
  double s = 0.0;
  for (int i = 0; i < poly.n; ++i) {
    const Vec2& a = poly.pts[i];
    const Vec2& b = poly.pts[(i + 1) % poly.n];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

std::array<Vec2, 4> bev_corners(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.dims.x(), hw = 0.5 * b.dims.y();
  // CCW order.
  const std::array<Vec2, 4> local = {Vec2(hl, hw), Vec2(-hl, hw),
                                     Vec2(-hl, -hw), Vec2(hl, -hw)};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Vec2(c * local[i].x() - s * local[i].y() + b.center.x(),
                  s * local[i].x() + c * local[i].y() + b.center.y());
  }
  return out;
}

// Sutherland-Hodgman clip of poly against the half-plane left of a->b.
Poly clip_halfplane(const Poly& poly, const Vec2& a, const Vec2& b) {
  Poly out;
  const Vec2 e = b - a;
  auto side = [&](const Vec2& p) {
    return e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
  };
  for (int i = 0; i < poly.n; ++i) {
    const Vec2& cur = poly.pts[i];
    const Vec2& nxt = poly.pts[(i + 1) % poly.n];
    const double sc = side(cur);
    const double sn = side(nxt);
    if (sc >= -kClipEps) {
      out.push(cur);
    }
    if ((sc > kClipEps && sn < -kClipEps) || (sc < -kClipEps && sn > kClipEps)) {
      const double t = sc / (sc - sn);
      out.push(cur + t * (nxt - cur));
    }
  }
  return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  Poly poly;
  for (const auto& p : ca) {
    poly.push(p);
  }
  for (int i = 0; i < 4 && poly.n > 2; ++i) {
    poly = clip_halfplane(poly, cb[i], cb[(i + 1) % 4]);
  }
  if (poly.n < 3) {
    return 0.0;
  }
  return std::max(0.0, polygon_area(poly));
}

double z_overlap(const Box3D& a, const Box3D& b) {
  const double lo = std::max(a.center.z() - 0.5 * a.dims.z(),
                             b.center.z() - 0.5 * b.dims.z());
  const double hi = std::min(a.center.z() + 0.5 * a.dims.z(),
                             b.center.z() + 0.5 * b.dims.z());
  return std::max(0.0, hi - lo);
}
}  // namespace

std::string to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::vehicle:
      return "vehicle";
    case ObjectClass::pedestrian:
      return "pedestrian";
    case ObjectClass::cyclist:
      return "cyclist";
  }
  throw std::logic_error("unknown class");
}

ObjectClass object_class_from_string(const std::string& s) {
  if (s == "vehicle") return ObjectClass::vehicle;
  if (s == "pedestrian") return ObjectClass::pedestrian;
  if (s == "cyclist") return ObjectClass::cyclist;
  throw std::invalid_argument("unknown object class: " + s);
}

Box3D::Box3D(const Vec3& center_, const Vec3& dims_, double yaw_)
    : center(center_), dims(dims_), yaw(wrap_angle(yaw_)) {
  if (!(dims.x() > 0.0 && dims.y() > 0.0 && dims.z() > 0.0)) {
    throw std::invalid_argument("Box3D: dims must be strictly positive");
  }
}

std::array<Vec3, 8> box_corners(const Box3D& b) {
  std::array<Vec3, 8> out;
  for (int k = 0; k < 8; ++k) {
    const Vec3 local(((k & 1) ? 0.5 : -0.5) * b.dims.x(),
                     ((k & 2) ? 0.5 : -0.5) * b.dims.y(),
                     ((k & 4) ? 0.5 : -0.5) * b.dims.z());
    out[k] = box_local_to_world(b, local);
  }
  return out;
}

Vec3 world_to_box_local(const Box3D& b, const Vec3& p) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Vec3 d = p - b.center;
  return Vec3(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
}

Vec3 box_local_to_world(const Box3D& b, const Vec3& p) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  return Vec3(c * p.x() - s * p.y() + b.center.x(),
              s * p.x() + c * p.y() + b.center.y(), p.z() + b.center.z());
}

bool point_in_box(const Box3D& b, const Vec3& p) {
  const Vec3 q = world_to_box_local(b, p);
  return std::abs(q.x()) <= 0.5 * b.dims.x() &&
         std::abs(q.y()) <= 0.5 * b.dims.y() &&
         std::abs(q.z()) <= 0.5 * b.dims.z();
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  const double area_a = a.dims.x() * a.dims.y();
  const double area_b = b.dims.x() * b.dims.y();
  return inter / (area_a + area_b - inter);
}

double intersection_volume(const Box3D& a, const Box3D& b) {
  return bev_intersection_area(a, b) * z_overlap(a, b);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  return inter / (a.volume() + b.volume() - inter);
}

std::vector<BoxProposal> nms(std::span<const BoxProposal> proposals,
                             double iou_threshold, bool per_class) {
  for (const auto& p : proposals) {
    if (!(p.score >= 0.0 && p.score <= 1.0)) {
      throw std::invalid_argument("nms: scores must be in [0, 1]");
    }
  }
  std::vector<int> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    if (proposals[l].score != proposals[r].score) {
      return proposals[l].score > proposals[r].score;
    }
    return l < r;
  });
  std::vector<BoxProposal> kept;
  for (int idx : order) {
    const auto& cand = proposals[idx];
    bool suppressed = false;
    for (const auto& k : kept) {
      if (per_class && k.class_id != cand.class_id) {
        continue;
      }
      if (iou_3d(k.box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(cand);
    }
  }
  return kept;
}

}  // namespace evdet
