#include "evdet3d/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evdet {

EventStream::EventStream(std::vector<Event> events, int width, int height)
    : events_(std::move(events)), width_(width), height_(height) {
  if (width_ <= 0 || height_ <= 0) {
    throw std::invalid_argument("EventStream: sensor size must be positive");
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (e.x < 0 || e.x >= width_ || e.y < 0 || e.y >= height_) {
      throw std::invalid_argument("EventStream: event outside sensor bounds");
    }
    if (e.polarity != 1 && e.polarity != -1) {
      throw std::invalid_argument("EventStream: polarity must be +1 or -1");
    }
    if (i > 0 && events_[i - 1].t > e.t) {
      throw std::invalid_argument("EventStream: events not sorted by timestamp");
    }
  }
}

std::span<const Event> slice_events(const EventStream& stream, double t0, double t1) {
  return slice_events(stream.events(), t0, t1);
}

std::span<const Event> slice_events(std::span<const Event> sorted, double t0, double t1) {
  if (t0 > t1) {
    throw std::invalid_argument("slice_events: t0 must not exceed t1");
  }
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), t0,
                             [](const Event& e, double t) { return e.t < t; });
  auto hi = std::lower_bound(lo, sorted.end(), t1,
                             [](const Event& e, double t) { return e.t < t; });
  return sorted.subspan(static_cast<std::size_t>(lo - sorted.begin()),
                        static_cast<std::size_t>(hi - lo));
}

EventVoxelGrid build_event_voxel_grid(std::span<const Event> events, int bins,
                                      int height, int width, double t0, double t1) {
  if (bins < 1 || height <= 0 || width <= 0) {
    throw std::invalid_argument("build_event_voxel_grid: bad grid shape");
  }
  if (!(t1 > t0)) {
    throw std::invalid_argument("build_event_voxel_grid: need t1 > t0");
  }
  EventVoxelGrid grid;
  grid.bins = bins;
  grid.height = height;
  grid.width = width;
  grid.t_start = t0;
  grid.t_end = t1;
  grid.data.assign(static_cast<std::size_t>(bins) * height * width, 0.0);
  const double scale = (bins - 1) / (t1 - t0);
  for (const Event& e : events) {
    if (e.t < t0 || e.t >= t1) {
      throw std::invalid_argument("build_event_voxel_grid: event outside [t0, t1)");
    }
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height) {
      throw std::invalid_argument("build_event_voxel_grid: event outside image");
    }
    const double tstar = (e.t - t0) * scale;  // zero when bins == 1
    const int b0 = static_cast<int>(std::floor(tstar));
    const double w1 = tstar - b0;
    const double p = static_cast<double>(e.polarity);
    grid.at(b0, e.y, e.x) += p * (1.0 - w1);
    if (w1 > 0.0 && b0 + 1 < bins) {
      grid.at(b0 + 1, e.y, e.x) += p * w1;
    }
  }
  return grid;
}

EventEncoder EventEncoder::make_identity(int bins) {
  EventEncoder enc;
  enc.mode = EventEncoderMode::identity;
  enc.stride = 1;
  enc.bins = bins;
  enc.channels = bins;
  return enc;
}

EventEncoder EventEncoder::make_linear(int bins, int channels, int stride, std::uint64_t seed) {
  if (stride < 1) {
    throw std::invalid_argument("EventEncoder: stride must be >= 1");
  }
  EventEncoder enc;
  enc.mode = EventEncoderMode::linear;
  enc.stride = stride;
  enc.bins = bins;
  enc.channels = channels;
  enc.mlp = MlpParams::make({bins, channels}, Activation::identity, Activation::identity, seed);
  return enc;
}

EventFeatureMap encode_event_features(const EventEncoder& enc, const EventVoxelGrid& grid) {
  if (grid.bins != enc.bins) {
    throw std::invalid_argument("encode_event_features: bin count mismatch");
  }
  if (enc.mode == EventEncoderMode::identity) {
    EventFeatureMap map;
    map.height = grid.height;
    map.width = grid.width;
    map.channels = grid.bins;
    map.stride = 1;
    map.data.resize(grid.data.size());
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        for (int b = 0; b < grid.bins; ++b) {
          map.at(y, x, b) = grid.at(b, y, x);
        }
      }
    }
    return map;
  }
  const int s = enc.stride;
  if (grid.height % s != 0 || grid.width % s != 0) {
    throw std::invalid_argument("encode_event_features: image size not divisible by stride");
  }
  const int hf = grid.height / s;
  const int wf = grid.width / s;
  // Average-pool each bin over s x s patches, then map bins -> channels per pixel.
  Eigen::MatrixXd pooled(enc.bins, static_cast<Eigen::Index>(hf) * wf);
  const double inv = 1.0 / (s * s);
  for (int y = 0; y < hf; ++y) {
    for (int x = 0; x < wf; ++x) {
      for (int b = 0; b < enc.bins; ++b) {
        double acc = 0.0;
        for (int dy = 0; dy < s; ++dy) {
          for (int dx = 0; dx < s; ++dx) {
            acc += grid.at(b, y * s + dy, x * s + dx);
          }
        }
        pooled(b, static_cast<Eigen::Index>(y) * wf + x) = acc * inv;
      }
    }
  }
  const Eigen::MatrixXd feat = mlp_forward(enc.mlp, pooled);
  EventFeatureMap map;
  map.height = hf;
  map.width = wf;
  map.channels = enc.channels;
  map.stride = s;
  map.data.resize(static_cast<std::size_t>(hf) * wf * enc.channels);
  for (int y = 0; y < hf; ++y) {
    for (int x = 0; x < wf; ++x) {
      for (int c = 0; c < enc.channels; ++c) {
        map.at(y, x, c) = feat(c, static_cast<Eigen::Index>(y) * wf + x);
      }
    }
  }
  return map;
}

}  // namespace evdet
