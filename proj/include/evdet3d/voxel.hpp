#pragma once

#include "evdet3d/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace evdet {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> intensity;  // empty or one value per point

  std::size_t size() const { return points.size(); }
};

// Axis-aligned voxelization region; the defaults match the full-scale
// configuration (0.1 x 0.1 x 0.15 m voxels over the front field of view).
struct VoxelConfig {
  Vec3 range_min{0.0, -75.2, -2.0};
  Vec3 range_max{75.2, 75.2, 4.0};
  Vec3 voxel_size{0.1, 0.1, 0.15};

  std::array<int, 3> grid_dims() const;
  void validate() const;
  Vec3 voxel_center(const std::array<int, 3>& index) const;
};

struct VoxelEntry {
  std::array<int, 3> index{};       // integer cell index along x, y, z
  std::vector<int> point_indices;   // indices into the source cloud, non-empty
  Vec3 centroid{Vec3::Zero()};
  Eigen::VectorXd feature;
};

// Non-empty voxels only, sorted by index for deterministic row order.
class SparseVoxelGrid {
 public:
  SparseVoxelGrid() = default;
  SparseVoxelGrid(VoxelConfig cfg, std::vector<VoxelEntry> entries, int dropped);

  const VoxelConfig& config() const { return cfg_; }
  const std::vector<VoxelEntry>& entries() const { return entries_; }
  std::vector<VoxelEntry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int dropped_points() const { return dropped_; }
  bool centroids_computed() const { return centroids_computed_; }
  bool features_computed() const { return features_computed_; }
  void mark_centroids() { centroids_computed_ = true; }
  void mark_features() { features_computed_ = true; }

 private:
  VoxelConfig cfg_;
  std::vector<VoxelEntry> entries_;
  int dropped_{0};
  bool centroids_computed_{false};
  bool features_computed_{false};
};

// Half-open cell bounds [lo, hi) with floor indexing; out-of-range points are
// dropped and counted, not an error.
SparseVoxelGrid voxelize(const PointCloud& cloud, const VoxelConfig& cfg);

// Arithmetic mean of the points in each voxel.
void compute_centroids(SparseVoxelGrid& grid, const PointCloud& cloud);

// Raw per-voxel descriptor: centroid offset from the voxel center (3),
// saturating point count n/(n+8) (1), mean |point - centroid| (3).
constexpr int kVoxelDescriptorSize = 7;
Eigen::VectorXd voxel_descriptor(const VoxelEntry& entry, const PointCloud& cloud,
                                 const VoxelConfig& cfg);

// Stand-in for the 3D backbone: a linear map from the raw descriptor to C
// channels. identity keeps the descriptor (C = 7).
struct VoxelEncoder {
  Eigen::MatrixXd weight;  // C x 7

  int channels() const { return static_cast<int>(weight.rows()); }
  static VoxelEncoder make_identity();
  static VoxelEncoder make_linear(int channels, std::uint64_t seed);
};

void encode_voxel_features(SparseVoxelGrid& grid, const PointCloud& cloud,
                           const VoxelEncoder& encoder);

// Process-wide voxelize() call counter, used to verify that voxel features
// are built once and shared across blind-time queries.
std::uint64_t voxelize_call_count();

}  // namespace evdet
