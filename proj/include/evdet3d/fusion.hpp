#pragma once

#include "evdet3d/boxes.hpp"
#include "evdet3d/events.hpp"
#include "evdet3d/geometry.hpp"
#include "evdet3d/nn.hpp"
#include "evdet3d/voxel.hpp"

#include <span>
#include <vector>

namespace evdet {

// Event features sampled at the image projections of voxel point centroids,
// row k aligned with grid entry k. Rows projecting outside the image or
// behind the camera are flagged invalid and zeroed.
struct VirtualEventFeatures {
  Eigen::MatrixXd features;     // N x C
  std::vector<uint8_t> valid;   // N
};

VirtualEventFeatures gather_virtual_event_features(const SparseVoxelGrid& grid,
                                                   const CameraModel& cam,
                                                   const EventFeatureMap& emap);

// Anchor set fed into RoI pooling: one row per 3D cell carrying its centroid,
// voxel-branch feature, event-branch feature, and event validity.
struct FusionInputs {
  std::vector<Vec3> centroids;
  Eigen::MatrixXd voxel_features;  // N x Cv
  Eigen::MatrixXd event_features;  // N x Ce
  std::vector<uint8_t> event_valid;

  std::size_t size() const { return centroids.size(); }
};

// Non-empty voxels only (the default): anchors are point centroids.
FusionInputs make_fusion_inputs(const SparseVoxelGrid& grid, const CameraModel& cam,
                                const EventFeatureMap& emap);
// Mask-off ablation: every cell of the dense grid becomes an anchor; empty
// cells use the cell center and a zero voxel feature.
FusionInputs make_fusion_inputs_all_cells(const SparseVoxelGrid& grid,
                                          const CameraModel& cam,
                                          const EventFeatureMap& emap);

// Per-proposal S x S x S grid of mean-pooled branch features. Cell (ix,iy,iz)
// has linear index ix + iy*S + iz*S^2 (x varies fastest).
struct RoiGridFeatures {
  int grid_size{0};
  Eigen::MatrixXd event_pooled;  // S^3 x Ce
  Eigen::MatrixXd voxel_pooled;  // S^3 x Cv
  std::vector<int> cell_count;        // anchors whose centroid fell in the cell
  std::vector<int> event_cell_count;  // of those, rows with valid event features

  bool cell_empty(int cell) const { return cell_count[cell] == 0; }
};

RoiGridFeatures roi_grid_pool_box(const Box3D& box, const FusionInputs& inputs, int grid_size);
std::vector<RoiGridFeatures> roi_grid_pool(std::span<const BoxProposal> proposals,
                                           const SparseVoxelGrid& grid,
                                           const VirtualEventFeatures& vef,
                                           int grid_size);

// Fused per-cell features a proposal's motion and confidence are decoded from.
struct ImplicitMotionField {
  Eigen::MatrixXd cells;  // Cf x S^3, column per cell

  Eigen::VectorXd flatten() const;  // cell-major: [cell0 channels, cell1 channels, ..]
};

ImplicitMotionField fuse_motion_field(const RoiGridFeatures& roi, const MlpParams& fusion_mlp);

// Box-local translation plus yaw increment over [0, t).
struct MotionVector {
  double dx{0.0}, dy{0.0}, dz{0.0}, dyaw{0.0};
};

MotionVector predict_motion(const ImplicitMotionField& field, const MlpParams& motion_mlp);
double predict_confidence(const ImplicitMotionField& field, const MlpParams& conf_mlp);

// Box shift: rotate the local offset by the box yaw, add the yaw increment.
Box3D apply_motion(const Box3D& b0, const MotionVector& m);

// Final score p0 * p_motion; both factors must be in [0, 1].
double combine_score(double p0, double p_motion);

// Bundle of everything the blind-time modules need at inference.
struct ModelParams {
  EventEncoder event_encoder;
  VoxelEncoder voxel_encoder;
  MlpParams fusion_mlp;
  MlpParams motion_mlp;
  MlpParams conf_mlp;
  int roi_grid_size{6};
  bool use_non_empty_mask{true};

  int event_channels() const { return event_encoder.channels; }
  int voxel_channels() const { return voxel_encoder.channels(); }
  int field_channels() const { return fusion_mlp.output_width(); }
  void validate() const;
};

// Full blind-time query: slice events over [0, t), encode, gather, pool,
// fuse, and emit motion-shifted proposals with combined scores. t = 0
// returns the proposals unchanged. The voxel grid must already carry
// centroids and features; it is shared, never rebuilt.
std::vector<BoxProposal> blind_time_detect(std::span<const BoxProposal> proposals,
                                           const SparseVoxelGrid& grid,
                                           const EventStream& events,
                                           const CameraModel& cam,
                                           const ModelParams& params, double t);

}  // namespace evdet
