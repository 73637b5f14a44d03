#pragma once

#include "evdet3d/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace evdet {

// One brightness-change record: pixel, polarity in {-1, +1}, seconds.
struct Event {
  int x{0};
  int y{0};
  int polarity{1};
  double t{0.0};
};

// Sorted, bounds-checked event stream. Sortedness is validated once at
// construction so slices stay O(log n + k).
class EventStream {
 public:
  EventStream() = default;
  EventStream(std::vector<Event> events, int width, int height);

  std::span<const Event> events() const { return events_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return events_.size(); }

 private:
  std::vector<Event> events_;
  int width_{0};
  int height_{0};
};

// Events with t0 <= t < t1, order preserved; binary-search endpoints.
std::span<const Event> slice_events(const EventStream& stream, double t0, double t1);
std::span<const Event> slice_events(std::span<const Event> sorted, double t0, double t1);

// B x H x W polarity-signed tensor built with a linear temporal kernel:
// t* = (tau - t0) / (t1 - t0) * (B - 1), bin b gets p * max(0, 1 - |b - t*|).
struct EventVoxelGrid {
  int bins{0}, height{0}, width{0};
  double t_start{0.0}, t_end{0.0};
  std::vector<double> data;  // [b][y][x]

  double& at(int b, int y, int x) { return data[(b * height + y) * width + x]; }
  double at(int b, int y, int x) const { return data[(b * height + y) * width + x]; }
};

EventVoxelGrid build_event_voxel_grid(std::span<const Event> events, int bins,
                                      int height, int width, double t0, double t1);

// Feature map produced from a grid; `stride` records the spatial downsampling
// so projected pixels can be mapped into feature coordinates.
struct EventFeatureMap {
  int height{0}, width{0}, channels{0}, stride{1};
  std::vector<double> data;  // [y][x][c]

  double& at(int y, int x, int c) { return data[(y * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(y * width + x) * channels + c]; }
};

enum class EventEncoderMode { identity, linear };

// Stand-in for the learned event feature encoder. identity: reshape to
// H x W x B. linear: stride-s average pooling followed by a per-pixel MLP.
struct EventEncoder {
  EventEncoderMode mode{EventEncoderMode::identity};
  int stride{1};
  int bins{5};
  int channels{5};
  MlpParams mlp;  // used in linear mode, input width = bins

  static EventEncoder make_identity(int bins);
  static EventEncoder make_linear(int bins, int channels, int stride, std::uint64_t seed);
};

EventFeatureMap encode_event_features(const EventEncoder& enc, const EventVoxelGrid& grid);

}  // namespace evdet
