#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evdet3d/annotations.hpp"

#include <cmath>
#include <random>

using namespace evdet;

namespace {
constexpr double kPi = 3.14159265358979323846;

TrackedAnnotation two_keyframes() {
  TrackedAnnotation track;
  track.track_id = "obj0";
  track.keyframes = {
      {0.0, Box3D(Vec3(0, 0, 0), Vec3(4, 2, 1.5), 0.0), ObjectClass::vehicle},
      {0.1, Box3D(Vec3(2, 0, 0), Vec3(4, 2, 1.5), kPi / 2.0), ObjectClass::vehicle}};
  return track;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Pose p;
  p.position = Vec3(gauss(rng), gauss(rng), gauss(rng));
  p.orientation = Quaternion(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  return p;
}
}  // namespace

TEST_CASE("interpolation endpoints, midpoints, and yaw slerp") {
  const auto track = two_keyframes();
  const auto dense = interpolate_annotations(track, 10);
  REQUIRE(dense.size() == 11);

  // Keyframes pass through bit-exact.
  CHECK(dense[0].t == track.keyframes[0].t);
  CHECK((dense[0].box.center - track.keyframes[0].box.center).norm() == 0.0);
  CHECK(dense[0].box.yaw == track.keyframes[0].box.yaw);
  CHECK(dense[10].t == track.keyframes[1].t);
  CHECK(dense[10].box.yaw == track.keyframes[1].box.yaw);

  CHECK((dense[5].box.center - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(dense[5].box.yaw == doctest::Approx(kPi / 4.0).epsilon(1e-12));
}

TEST_CASE("dense timestamps are strictly increasing and evenly spaced") {
  TrackedAnnotation track = two_keyframes();
  track.keyframes.push_back(
      {0.25, Box3D(Vec3(3, 1, 0), Vec3(4, 2, 1.5), 1.0), ObjectClass::vehicle});
  const int sub = 7;
  const auto dense = interpolate_annotations(track, sub);
  REQUIRE(dense.size() == 2 * sub + 1);
  for (std::size_t i = 1; i < dense.size(); ++i) {
    CHECK(dense[i].t > dense[i - 1].t);
  }
  for (int interval = 0; interval < 2; ++interval) {
    const double lo = track.keyframes[static_cast<std::size_t>(interval)].t;
    const double hi = track.keyframes[static_cast<std::size_t>(interval) + 1].t;
    for (int j = 0; j < sub; ++j) {
      const double expected = lo + (hi - lo) * j / sub;
      CHECK(std::abs(dense[static_cast<std::size_t>(interval * sub + j)].t - expected) < 1e-12);
    }
  }
}

TEST_CASE("interpolation edge cases") {
  TrackedAnnotation single;
  single.track_id = "solo";
  single.keyframes = {{0.0, Box3D(Vec3(1, 1, 1), Vec3(1, 1, 1), 0.3), ObjectClass::pedestrian}};
  const auto through = interpolate_annotations(single, 10);
  REQUIRE(through.size() == 1);
  CHECK(through[0].box.yaw == single.keyframes[0].box.yaw);

  TrackedAnnotation unsorted = two_keyframes();
  std::swap(unsorted.keyframes[0], unsorted.keyframes[1]);
  CHECK_THROWS_AS(interpolate_annotations(unsorted, 10), std::invalid_argument);
  CHECK_THROWS_AS(interpolate_annotations(two_keyframes(), 0), std::invalid_argument);
}

TEST_CASE("subdivisions=1 reproduces the keyframes") {
  const auto track = two_keyframes();
  const auto dense = interpolate_annotations(track, 1);
  REQUIRE(dense.size() == track.keyframes.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    CHECK(dense[i].t == track.keyframes[i].t);
    CHECK((dense[i].box.center - track.keyframes[i].box.center).norm() == 0.0);
  }
}

TEST_CASE("nearest source selection") {
  CHECK(select_nearest_source(0.0, 0.0, 1.0) == 0.0);
  CHECK(select_nearest_source(0.5, 0.0, 1.0) == 1.0);  // tie goes to t1
  CHECK(select_nearest_source(0.999, 0.0, 1.0) == 1.0);
  CHECK(select_nearest_source(0.2, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(select_nearest_source(0.5, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pose sync identity and pure translation") {
  std::mt19937_64 rng(301);
  TimedPointCloud source;
  source.timestamp = 0.0;
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    source.cloud.points.emplace_back(gauss(rng), gauss(rng), gauss(rng));
  }

  // Same pose: identical points.
  source.pose = random_pose(rng);
  const PointCloud same = sync_pointcloud_to_time(source, source.pose);
  for (std::size_t i = 0; i < same.points.size(); ++i) {
    CHECK((same.points[i] - source.cloud.points[i]).norm() < 1e-12);
  }

  // Source pose ahead by (1,0,0), target identity: points shift by (1,0,0).
  TimedPointCloud shifted = source;
  shifted.pose = Pose{Vec3(1, 0, 0), Quaternion::identity()};
  const PointCloud moved = sync_pointcloud_to_time(shifted, Pose{});
  for (std::size_t i = 0; i < moved.points.size(); ++i) {
    CHECK((moved.points[i] - (source.cloud.points[i] + Vec3(1, 0, 0))).norm() < 1e-12);
  }
}

TEST_CASE("pose sync round trip and rigidity") {
  std::mt19937_64 rng(307);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    TimedPointCloud source;
    source.timestamp = 0.0;
    source.pose = random_pose(rng);
    for (int i = 0; i < 30; ++i) {
      source.cloud.points.emplace_back(gauss(rng), gauss(rng), gauss(rng));
    }
    const Pose target = random_pose(rng);
    const PointCloud synced = sync_pointcloud_to_time(source, target);

    // Pairwise distances preserved.
    for (int i = 0; i < 10; ++i) {
      const double before = (source.cloud.points[i] - source.cloud.points[i + 1]).norm();
      const double after = (synced.points[i] - synced.points[i + 1]).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }

    // Round trip back to the source pose restores the cloud.
    TimedPointCloud intermediate;
    intermediate.cloud = synced;
    intermediate.timestamp = 1.0;
    intermediate.pose = target;
    const PointCloud restored = sync_pointcloud_to_time(intermediate, source.pose);
    for (std::size_t i = 0; i < restored.points.size(); ++i) {
      CHECK((restored.points[i] - source.cloud.points[i]).norm() < 1e-9);
    }
  }
}

TEST_CASE("sync_to_image_time endpoint and constant-pose behavior") {
  std::mt19937_64 rng(311);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TimedPointCloud c0, c1;
  c0.timestamp = 0.0;
  c1.timestamp = 0.1;
  for (int i = 0; i < 40; ++i) {
    c0.cloud.points.emplace_back(gauss(rng), gauss(rng), gauss(rng));
    c1.cloud.points.emplace_back(gauss(rng), gauss(rng), gauss(rng));
  }

  // Identical poses at both ends: nearest cloud passes through unchanged.
  c0.pose = c1.pose = random_pose(rng);
  const PointCloud near_start = sync_to_image_time(0.02, c0, c1);
  for (std::size_t i = 0; i < near_start.points.size(); ++i) {
    CHECK((near_start.points[i] - c0.cloud.points[i]).norm() < 1e-12);
  }

  // t = t0 exactly returns P_t0 unchanged.
  c1.pose = random_pose(rng);
  const PointCloud at_t0 = sync_to_image_time(0.0, c0, c1);
  for (std::size_t i = 0; i < at_t0.points.size(); ++i) {
    CHECK((at_t0.points[i] - c0.cloud.points[i]).norm() < 1e-12);
  }

  CHECK_THROWS_AS(sync_to_image_time(0.2, c0, c1), std::invalid_argument);
  CHECK_THROWS_AS(sync_to_image_time(-0.1, c0, c1), std::invalid_argument);
}

TEST_CASE("constant-velocity sync reduces residual displacement") {
  // Sensor translating at constant velocity; the scene is static in world.
  // Points are captured in the sensor frame: p_sensor = p_world - position.
  const Vec3 velocity(2.0, -1.0, 0.5);
  std::mt19937_64 rng(313);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::vector<Vec3> world_points;
  for (int i = 0; i < 60; ++i) {
    world_points.emplace_back(gauss(rng), gauss(rng), gauss(rng));
  }
  TimedPointCloud c0, c1;
  c0.timestamp = 0.0;
  c1.timestamp = 1.0;
  c0.pose = Pose{Vec3::Zero(), Quaternion::identity()};
  c1.pose = Pose{velocity, Quaternion::identity()};
  for (const auto& w : world_points) {
    c0.cloud.points.push_back(w);
    c1.cloud.points.push_back(w - velocity);
  }
  const double t = 0.3;
  const PointCloud synced = sync_to_image_time(t, c0, c1);
  // Oracle: at time t the sensor sits at t*velocity, so the static scene
  // appears at w - t*velocity.
  for (std::size_t i = 0; i < synced.points.size(); ++i) {
    const Vec3 expected = world_points[i] - t * velocity;
    const double residual = (synced.points[i] - expected).norm();
    const double raw = (c0.cloud.points[i] - expected).norm();
    CHECK(residual < 1e-9);
    CHECK(residual <= raw + 1e-12);
  }
}

TEST_CASE("annotation filter removes sparse and far boxes") {
  PointCloud cloud;
  cloud.points = {Vec3(1, 0, 0),  Vec3(1.1, 0, 0), Vec3(1.2, 0.1, 0), Vec3(0.9, -0.1, 0),
                  Vec3(1.0, 0.1, 0), Vec3(30, 0, 0)};
  std::vector<AnnotationKeyframe> annos = {
      // 5 points inside, 1 m range: kept.
      {0.0, Box3D(Vec3(1, 0, 0), Vec3(1, 1, 1), 0.0), ObjectClass::vehicle},
      // Exactly one point inside: removed.
      {0.0, Box3D(Vec3(30, 0, 0), Vec3(1, 1, 1), 0.0), ObjectClass::vehicle},
      // 60 m away: removed regardless of points.
      {0.0, Box3D(Vec3(60, 0, 0), Vec3(1, 1, 1), 0.0), ObjectClass::vehicle},
      // No points at all: removed.
      {0.0, Box3D(Vec3(10, 10, 0), Vec3(1, 1, 1), 0.0), ObjectClass::pedestrian}};
  const auto kept = filter_annotations(annos, cloud, 50.0, 2);
  REQUIRE(kept.size() == 1);
  CHECK((kept[0].box.center - Vec3(1, 0, 0)).norm() == 0.0);
}

TEST_CASE("filter output is an ordered subsequence") {
  PointCloud cloud;
  for (int i = 0; i < 100; ++i) {
    cloud.points.emplace_back(0.1 * i, 0.0, 0.0);
  }
  std::vector<AnnotationKeyframe> annos;
  for (int i = 0; i < 20; ++i) {
    annos.push_back({0.1 * i, Box3D(Vec3(0.5 * i, 0, 0), Vec3(1, 1, 1), 0.0),
                     ObjectClass::cyclist});
  }
  const auto kept = filter_annotations(annos, cloud, 6.0, 2);
  std::size_t cursor = 0;
  for (const auto& k : kept) {
    bool found = false;
    for (; cursor < annos.size(); ++cursor) {
      if (annos[cursor].t == k.t &&
          (annos[cursor].box.center - k.box.center).norm() == 0.0) {
        found = true;
        ++cursor;
        break;
      }
    }
    CHECK(found);
  }
}
