#include "evdet3d/voxel.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace evdet {

namespace {
std::atomic<std::uint64_t> g_voxelize_calls{0};
}

std::array<int, 3> VoxelConfig::grid_dims() const {
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) {
    dims[a] = static_cast<int>(std::ceil((range_max[a] - range_min[a]) / voxel_size[a]));
  }
  return dims;
}

void VoxelConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(range_max[a] > range_min[a])) {
      throw std::invalid_argument("VoxelConfig: range_max must exceed range_min");
    }
    if (!(voxel_size[a] > 0.0)) {
      throw std::invalid_argument("VoxelConfig: voxel_size must be positive");
    }
  }
}

Vec3 VoxelConfig::voxel_center(const std::array<int, 3>& index) const {
  return Vec3(range_min.x() + (index[0] + 0.5) * voxel_size.x(),
              range_min.y() + (index[1] + 0.5) * voxel_size.y(),
              range_min.z() + (index[2] + 0.5) * voxel_size.z());
}

SparseVoxelGrid::SparseVoxelGrid(VoxelConfig cfg, std::vector<VoxelEntry> entries, int dropped)
    : cfg_(std::move(cfg)), entries_(std::move(entries)), dropped_(dropped) {}

SparseVoxelGrid voxelize(const PointCloud& cloud, const VoxelConfig& cfg) {
  cfg.validate();
  g_voxelize_calls.fetch_add(1, std::memory_order_relaxed);
  std::map<std::array<int, 3>, std::vector<int>> cells;
  int dropped = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    bool in_range = true;
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      if (!(p[a] >= cfg.range_min[a] && p[a] < cfg.range_max[a])) {
        in_range = false;
        break;
      }
      idx[a] = static_cast<int>(std::floor((p[a] - cfg.range_min[a]) / cfg.voxel_size[a]));
    }
    if (!in_range) {
      ++dropped;
      continue;
    }
    cells[idx].push_back(static_cast<int>(i));
  }
  std::vector<VoxelEntry> entries;
  entries.reserve(cells.size());
  for (auto& [idx, group] : cells) {
    VoxelEntry e;
    e.index = idx;
    e.point_indices = std::move(group);
    entries.push_back(std::move(e));
  }
  return SparseVoxelGrid(cfg, std::move(entries), dropped);
}

void compute_centroids(SparseVoxelGrid& grid, const PointCloud& cloud) {
  for (auto& entry : grid.entries()) {
    if (entry.point_indices.empty()) {
      throw std::logic_error("compute_centroids: empty voxel group");
    }
    Vec3 acc = Vec3::Zero();
    for (int i : entry.point_indices) {
      acc += cloud.points[static_cast<std::size_t>(i)];
    }
    entry.centroid = acc / static_cast<double>(entry.point_indices.size());
  }
  grid.mark_centroids();
}

Eigen::VectorXd voxel_descriptor(const VoxelEntry& entry, const PointCloud& cloud,
                                 const VoxelConfig& cfg) {
  Eigen::VectorXd d(kVoxelDescriptorSize);
  const Vec3 center = cfg.voxel_center(entry.index);
  const Vec3 offset = entry.centroid - center;
  const double n = static_cast<double>(entry.point_indices.size());
  Vec3 spread = Vec3::Zero();
  for (int i : entry.point_indices) {
    spread += (cloud.points[static_cast<std::size_t>(i)] - entry.centroid).cwiseAbs();
  }
  spread /= n;
  d << offset.x(), offset.y(), offset.z(), n / (n + 8.0), spread.x(), spread.y(), spread.z();
  return d;
}

VoxelEncoder VoxelEncoder::make_identity() {
  VoxelEncoder enc;
  enc.weight = Eigen::MatrixXd::Identity(kVoxelDescriptorSize, kVoxelDescriptorSize);
  return enc;
}

VoxelEncoder VoxelEncoder::make_linear(int channels, std::uint64_t seed) {
  if (channels < 1) {
    throw std::invalid_argument("VoxelEncoder: channels must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VoxelEncoder enc;
  enc.weight.resize(channels, kVoxelDescriptorSize);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kVoxelDescriptorSize));
  for (int r = 0; r < channels; ++r) {
    for (int c = 0; c < kVoxelDescriptorSize; ++c) {
      enc.weight(r, c) = gauss(rng) * scale;
    }
  }
  return enc;
}

void encode_voxel_features(SparseVoxelGrid& grid, const PointCloud& cloud,
                           const VoxelEncoder& encoder) {
  if (!grid.centroids_computed()) {
    throw std::logic_error("encode_voxel_features: centroids not computed");
  }
  for (auto& entry : grid.entries()) {
    entry.feature = encoder.weight * voxel_descriptor(entry, cloud, grid.config());
  }
  grid.mark_features();
}

std::uint64_t voxelize_call_count() {
  return g_voxelize_calls.load(std::memory_order_relaxed);
}

}  // namespace evdet
