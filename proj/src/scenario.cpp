#include "evdet3d/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace evdet {

namespace {

RigidTransform default_extrinsic() {
  // World x-forward / y-left / z-up to camera z-forward / x-right / y-down.
  Mat3 r;
  r << 0, -1, 0,
       0, 0, -1,
       1, 0, 0;
  return RigidTransform(r, Vec3::Zero());
}

Vec3 sample_surface_point(const Box3D& box, std::mt19937_64& rng) {
  const double l = box.dims.x(), w = box.dims.y(), h = box.dims.z();
  // Face areas: x-ends (w*h), y-sides (l*h), z-faces (l*w), each twice.
  const double a_x = w * h, a_y = l * h, a_z = l * w;
  const double total = 2.0 * (a_x + a_y + a_z);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double pick = unit(rng) * total;
  const double u = unit(rng) - 0.5;
  const double v = unit(rng) - 0.5;
  Vec3 local;
  if (pick < 2.0 * a_x) {
    const double sign = pick < a_x ? 0.5 : -0.5;
    local = Vec3(sign * l, u * w, v * h);
  } else if (pick < 2.0 * (a_x + a_y)) {
    pick -= 2.0 * a_x;
    const double sign = pick < a_y ? 0.5 : -0.5;
    local = Vec3(u * l, sign * w, v * h);
  } else {
    pick -= 2.0 * (a_x + a_y);
    const double sign = pick < a_z ? 0.5 : -0.5;
    local = Vec3(u * l, v * w, sign * h);
  }
  return box_local_to_world(box, local);
}

// Wireframe edges as corner-index pairs (see box_corners ordering).
constexpr std::array<std::pair<int, int>, 12> kEdges = {{{0, 1}, {1, 3}, {3, 2}, {2, 0},
                                                          {4, 5}, {5, 7}, {7, 6}, {6, 4},
                                                          {0, 4}, {1, 5}, {3, 7}, {2, 6}}};

double motion_magnitude(const ScenarioBox& sb) {
  return sb.velocity.norm() +
         std::abs(sb.yaw_rate) * 0.25 * (sb.box.dims.x() + sb.box.dims.y());
}

}  // namespace

ScenarioSpec ScenarioSpec::default_spec() {
  ScenarioSpec spec;
  spec.camera = CameraModel(200.0, 200.0, 160.0, 120.0, default_extrinsic(), 320, 240);
  spec.boxes = {
      {Box3D({8.0, -2.0, 0.8}, {4.6, 1.8, 1.6}, 0.15), {2.9, 0.4, 0.0}, 0.25,
       ObjectClass::vehicle},
      {Box3D({7.0, 2.5, 0.9}, {0.9, 0.85, 1.75}, 0.8), {-0.9, 0.9, 0.0}, 0.0,
       ObjectClass::pedestrian},
      {Box3D({12.0, 1.0, 0.85}, {1.8, 0.6, 1.7}, -0.5), {1.2, -2.2, 0.0}, -0.3,
       ObjectClass::cyclist},
  };
  return spec;
}

Box3D box_at_time(const ScenarioBox& sb, double t) {
  return Box3D(sb.box.center + t * sb.velocity, sb.box.dims,
               wrap_angle(sb.box.yaw + t * sb.yaw_rate));
}

MotionVector true_motion(const ScenarioBox& sb, double t) {
  const Vec3 local = world_to_box_local(sb.box, sb.box.center + t * sb.velocity);
  return MotionVector{local.x(), local.y(), local.z(), wrap_angle(t * sb.yaw_rate)};
}

ScenarioData generate(const ScenarioSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScenarioData data;

  auto sample_cloud = [&](double t) {
    PointCloud cloud;
    cloud.points.reserve(spec.boxes.size() * static_cast<std::size_t>(spec.points_per_box));
    for (const auto& sb : spec.boxes) {
      const Box3D box = box_at_time(sb, t);
      for (int i = 0; i < spec.points_per_box; ++i) {
        Vec3 p = sample_surface_point(box, rng);
        p += spec.point_jitter * Vec3(gauss(rng), gauss(rng), gauss(rng));
        cloud.points.push_back(p);
      }
    }
    return cloud;
  };
  data.points_t0 = sample_cloud(0.0);
  data.points_t1 = sample_cloud(1.0);

  std::vector<Event> events;
  for (const auto& sb : spec.boxes) {
    const int count = static_cast<int>(
        std::lround(spec.events_per_unit_motion * motion_magnitude(sb)));
    for (int j = 0; j < count; ++j) {
      const double tau = (j + unit(rng)) / count;
      const Box3D box = box_at_time(sb, tau);
      const auto corners = box_corners(box);
      const auto edge = kEdges[static_cast<std::size_t>(
          std::min<int>(static_cast<int>(unit(rng) * 12.0), 11))];
      const double f = unit(rng);
      const Vec3 local = world_to_box_local(
          box, corners[static_cast<std::size_t>(edge.first)] +
                   f * (corners[static_cast<std::size_t>(edge.second)] -
                        corners[static_cast<std::size_t>(edge.first)]));
      const Vec3 p = box_local_to_world(box, local);
      const double jx = spec.event_pixel_jitter * gauss(rng);
      const double jy = spec.event_pixel_jitter * gauss(rng);
      const auto proj = try_project_point(spec.camera, p);
      if (!proj) {
        continue;
      }
      // Polarity follows the apparent motion direction of the emitting
      // silhouette point, the way a moving edge flips sign with contrast.
      int polarity = 1;
      const Box3D ahead = box_at_time(sb, tau + 1e-3);
      const auto proj_ahead = try_project_point(spec.camera, box_local_to_world(ahead, local));
      if (proj_ahead) {
        const Vec2 flow = proj_ahead->pixel - proj->pixel;
        polarity = (std::abs(flow.x()) >= std::abs(flow.y()) ? flow.x() : flow.y()) >= 0.0
                       ? 1
                       : -1;
      }
      const int px = static_cast<int>(std::lround(proj->pixel.x() + jx));
      const int py = static_cast<int>(std::lround(proj->pixel.y() + jy));
      if (px < 0 || px >= spec.camera.width || py < 0 || py >= spec.camera.height) {
        continue;
      }
      events.push_back(Event{px, py, polarity, tau});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  data.events = EventStream(std::move(events), spec.camera.width, spec.camera.height);

  for (int k = 0; k < spec.gt_steps; ++k) {
    const double t = static_cast<double>(k) / spec.gt_steps;
    for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
      LabeledBox row;
      row.t = t;
      row.class_id = spec.boxes[b].class_id;
      row.box = box_at_time(spec.boxes[b], t);
      row.track_id = static_cast<int>(b);
      data.ground_truth.push_back(row);
    }
  }

  for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
    const Vec3 jitter(gauss(rng), gauss(rng), gauss(rng));
    BoxProposal prop;
    prop.box = box_at_time(spec.boxes[b], 0.0);
    prop.box.center += spec.proposal_center_jitter * jitter;
    prop.class_id = spec.boxes[b].class_id;
    prop.score = 1.0;
    prop.track_id = static_cast<int>(b);
    data.proposals.push_back(prop);
  }
  return data;
}

}  // namespace evdet
