#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evdet3d/events.hpp"

#include <cmath>
#include <random>

using namespace evdet;

namespace {
std::vector<Event> events_at(std::initializer_list<double> times) {
  std::vector<Event> out;
  for (double t : times) {
    out.push_back(Event{0, 0, 1, t});
  }
  return out;
}
}  // namespace

TEST_CASE("stream construction validates order, bounds, polarity") {
  CHECK_THROWS_AS(EventStream(events_at({0.5, 0.1}), 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(EventStream({Event{9, 0, 1, 0.0}}, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(EventStream({Event{0, 0, 2, 0.0}}, 4, 4), std::invalid_argument);
  CHECK_NOTHROW(EventStream(events_at({0.1, 0.1, 0.2}), 4, 4));
}

TEST_CASE("slice_events half-open boundaries") {
  const EventStream stream(events_at({0.0, 0.5, 1.0}), 4, 4);
  const auto sliced = slice_events(stream, 0.0, 1.0);
  REQUIRE(sliced.size() == 2);
  CHECK(sliced[0].t == 0.0);
  CHECK(sliced[1].t == 0.5);

  CHECK(slice_events(stream, 0.5, 0.5).empty());

  const EventStream interior(events_at({0.1, 0.2, 0.3}), 4, 4);
  const auto mid = slice_events(interior, 0.15, 0.35);
  REQUIRE(mid.size() == 2);
  CHECK(mid[0].t == 0.2);

  CHECK_THROWS_AS(slice_events(stream, 0.5, 0.1), std::invalid_argument);
}

TEST_CASE("slices over adjacent intervals partition the stream") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Event> events;
  for (int i = 0; i < 500; ++i) {
    events.push_back(Event{0, 0, 1, unit(rng)});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  const EventStream stream(events, 4, 4);
  const auto left = slice_events(stream, 0.0, 0.4);
  const auto right = slice_events(stream, 0.4, 1.0);
  const auto whole = slice_events(stream, 0.0, 1.0);
  CHECK(left.size() + right.size() == whole.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    CHECK(left[i].t == whole[i].t);
  }
  for (std::size_t i = 0; i < right.size(); ++i) {
    CHECK(right[i].t == whole[left.size() + i].t);
  }
}

TEST_CASE("voxel grid kernel peak and symmetry") {
  // t* = 2 exactly: everything lands in bin 2.
  {
    const std::vector<Event> events{Event{3, 4, 1, 0.5}};
    const auto grid = build_event_voxel_grid(events, 5, 6, 6, 0.0, 1.0);
    CHECK(grid.at(2, 4, 3) == doctest::Approx(1.0).epsilon(1e-12));
    for (int b = 0; b < 5; ++b) {
      if (b != 2) {
        CHECK(grid.at(b, 4, 3) == 0.0);
      }
    }
  }
  // t* = 1.5: split evenly between bins 1 and 2.
  {
    const std::vector<Event> events{Event{1, 1, 1, 0.375}};
    const auto grid = build_event_voxel_grid(events, 5, 4, 4, 0.0, 1.0);
    CHECK(grid.at(1, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grid.at(2, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("per-event bin mass is a partition of unity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int bins = 5;
  for (int i = 0; i < 100; ++i) {
    const double t = unit(rng);
    const int polarity = unit(rng) < 0.5 ? -1 : 1;
    const std::vector<Event> one{Event{2, 3, polarity, t}};
    const auto grid = build_event_voxel_grid(one, bins, 5, 5, 0.0, 1.0);
    // Oracle: brute-force kernel sum over all bins.
    double mass = 0.0;
    const double tstar = t * (bins - 1);
    for (int b = 0; b < bins; ++b) {
      mass += std::max(0.0, 1.0 - std::abs(b - tstar));
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    double grid_mass = 0.0;
    for (int b = 0; b < bins; ++b) {
      grid_mass += std::abs(grid.at(b, 3, 2));
    }
    CHECK(grid_mass == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("grid construction is additive over disjoint event sets") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Event> a, b, both;
  for (int i = 0; i < 200; ++i) {
    const Event e{static_cast<int>(unit(rng) * 8), static_cast<int>(unit(rng) * 8),
                  unit(rng) < 0.5 ? -1 : 1, unit(rng)};
    (i % 2 == 0 ? a : b).push_back(e);
    both.push_back(e);
  }
  const auto grid_a = build_event_voxel_grid(a, 5, 8, 8, 0.0, 1.0);
  const auto grid_b = build_event_voxel_grid(b, 5, 8, 8, 0.0, 1.0);
  const auto grid_both = build_event_voxel_grid(both, 5, 8, 8, 0.0, 1.0);
  for (std::size_t i = 0; i < grid_both.data.size(); ++i) {
    CHECK(grid_both.data[i] == doctest::Approx(grid_a.data[i] + grid_b.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("grid rejects bad inputs") {
  CHECK_THROWS_AS(build_event_voxel_grid({}, 5, 4, 4, 1.0, 1.0), std::invalid_argument);
  const std::vector<Event> late{Event{0, 0, 1, 2.0}};
  CHECK_THROWS_AS(build_event_voxel_grid(late, 5, 4, 4, 0.0, 1.0), std::invalid_argument);
  const std::vector<Event> outside{Event{10, 0, 1, 0.5}};
  CHECK_THROWS_AS(build_event_voxel_grid(outside, 5, 4, 4, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("identity encoder reorders the grid") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Event> events;
  for (int i = 0; i < 50; ++i) {
    events.push_back(Event{static_cast<int>(unit(rng) * 4), static_cast<int>(unit(rng) * 4),
                           unit(rng) < 0.5 ? -1 : 1, unit(rng)});
  }
  const auto grid = build_event_voxel_grid(events, 5, 4, 4, 0.0, 1.0);
  const auto enc = EventEncoder::make_identity(5);
  const auto map = encode_event_features(enc, grid);
  CHECK(map.stride == 1);
  CHECK(map.channels == 5);
  for (int b = 0; b < 5; ++b) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        CHECK(map.at(y, x, b) == grid.at(b, y, x));
      }
    }
  }
}

TEST_CASE("zero grid encodes to a zero feature map") {
  const auto grid = build_event_voxel_grid({}, 5, 8, 8, 0.0, 1.0);
  const auto enc = EventEncoder::make_linear(5, 7, 2, 99);
  const auto map = encode_event_features(enc, grid);
  CHECK(map.height == 4);
  CHECK(map.width == 4);
  CHECK(map.channels == 7);
  for (double v : map.data) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("stride-2 average pooling of a constant patch") {
  EventVoxelGrid grid;
  grid.bins = 1;
  grid.height = 2;
  grid.width = 2;
  grid.t_start = 0.0;
  grid.t_end = 1.0;
  grid.data.assign(4, 3.5);
  auto enc = EventEncoder::make_linear(1, 1, 2, 0);
  enc.mlp.layers[0].weight(0, 0) = 1.0;  // pass-through map
  enc.mlp.layers[0].bias[0] = 0.0;
  const auto map = encode_event_features(enc, grid);
  REQUIRE(map.data.size() == 1);
  CHECK(map.data[0] == doctest::Approx(3.5).epsilon(1e-12));
}
