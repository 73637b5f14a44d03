#include "evdet3d/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace evdet {

namespace {

// Bilinear sample of the feature map at feature-space coordinates (u, v);
// returns false when (u, v) falls outside [0, W-1] x [0, H-1].
bool bilinear_sample(const EventFeatureMap& emap, double u, double v,
                     Eigen::Ref<Eigen::VectorXd> out) {
  if (!(u >= 0.0 && u <= emap.width - 1.0 && v >= 0.0 && v <= emap.height - 1.0)) {
    return false;
  }
  const int x0 = std::min(static_cast<int>(std::floor(u)), emap.width - 2 >= 0 ? emap.width - 2 : 0);
  const int y0 = std::min(static_cast<int>(std::floor(v)), emap.height - 2 >= 0 ? emap.height - 2 : 0);
  const int x1 = std::min(x0 + 1, emap.width - 1);
  const int y1 = std::min(y0 + 1, emap.height - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  for (int c = 0; c < emap.channels; ++c) {
    out[c] = w00 * emap.at(y0, x0, c) + w10 * emap.at(y0, x1, c) +
             w01 * emap.at(y1, x0, c) + w11 * emap.at(y1, x1, c);
  }
  return true;
}

void gather_rows(const std::vector<Vec3>& centroids, const CameraModel& cam,
                 const EventFeatureMap& emap, Eigen::MatrixXd& features,
                 std::vector<uint8_t>& valid) {
  const auto n = static_cast<Eigen::Index>(centroids.size());
  features = Eigen::MatrixXd::Zero(n, emap.channels);
  valid.assign(centroids.size(), 0);
  Eigen::VectorXd row(emap.channels);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto proj = try_project_point(cam, centroids[static_cast<std::size_t>(k)]);
    if (!proj) {
      continue;
    }
    const double u = proj->pixel.x() / emap.stride;
    const double v = proj->pixel.y() / emap.stride;
    if (bilinear_sample(emap, u, v, row)) {
      features.row(k) = row;
      valid[static_cast<std::size_t>(k)] = 1;
    }
  }
}

}  // namespace

VirtualEventFeatures gather_virtual_event_features(const SparseVoxelGrid& grid,
                                                   const CameraModel& cam,
                                                   const EventFeatureMap& emap) {
  if (!grid.centroids_computed()) {
    throw std::logic_error("gather_virtual_event_features: centroids not computed");
  }
  std::vector<Vec3> centroids;
  centroids.reserve(grid.size());
  for (const auto& entry : grid.entries()) {
    centroids.push_back(entry.centroid);
  }
  VirtualEventFeatures vef;
  gather_rows(centroids, cam, emap, vef.features, vef.valid);
  return vef;
}

FusionInputs make_fusion_inputs(const SparseVoxelGrid& grid, const CameraModel& cam,
                                const EventFeatureMap& emap) {
  if (!grid.features_computed()) {
    throw std::logic_error("make_fusion_inputs: voxel features not computed");
  }
  FusionInputs in;
  in.centroids.reserve(grid.size());
  const int cv = grid.entries().empty() ? 0 : static_cast<int>(grid.entries().front().feature.size());
  in.voxel_features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), cv);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& entry = grid.entries()[k];
    in.centroids.push_back(entry.centroid);
    in.voxel_features.row(static_cast<Eigen::Index>(k)) = entry.feature;
  }
  gather_rows(in.centroids, cam, emap, in.event_features, in.event_valid);
  return in;
}

FusionInputs make_fusion_inputs_all_cells(const SparseVoxelGrid& grid,
                                          const CameraModel& cam,
                                          const EventFeatureMap& emap) {
  if (!grid.features_computed()) {
    throw std::logic_error("make_fusion_inputs_all_cells: voxel features not computed");
  }
  const auto dims = grid.config().grid_dims();
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  const int cv = grid.entries().empty() ? 0 : static_cast<int>(grid.entries().front().feature.size());
  FusionInputs in;
  in.centroids.resize(total);
  in.voxel_features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), cv);
  auto linear = [&](const std::array<int, 3>& idx) {
    return static_cast<std::size_t>(idx[0]) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(idx[1]) + static_cast<std::size_t>(dims[1]) * idx[2]);
  };
  for (int iz = 0; iz < dims[2]; ++iz) {
    for (int iy = 0; iy < dims[1]; ++iy) {
      for (int ix = 0; ix < dims[0]; ++ix) {
        const std::array<int, 3> idx{ix, iy, iz};
        in.centroids[linear(idx)] = grid.config().voxel_center(idx);
      }
    }
  }
  for (const auto& entry : grid.entries()) {
    const std::size_t k = linear(entry.index);
    in.centroids[k] = entry.centroid;
    in.voxel_features.row(static_cast<Eigen::Index>(k)) = entry.feature;
  }
  gather_rows(in.centroids, cam, emap, in.event_features, in.event_valid);
  return in;
}

RoiGridFeatures roi_grid_pool_box(const Box3D& box, const FusionInputs& inputs, int grid_size) {
  if (grid_size < 1) {
    throw std::invalid_argument("roi_grid_pool: grid size must be >= 1");
  }
  const int s = grid_size;
  const int cells = s * s * s;
  RoiGridFeatures roi;
  roi.grid_size = s;
  roi.event_pooled = Eigen::MatrixXd::Zero(cells, inputs.event_features.cols());
  roi.voxel_pooled = Eigen::MatrixXd::Zero(cells, inputs.voxel_features.cols());
  roi.cell_count.assign(static_cast<std::size_t>(cells), 0);
  roi.event_cell_count.assign(static_cast<std::size_t>(cells), 0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vec3 q = world_to_box_local(box, inputs.centroids[k]);
    if (std::abs(q.x()) > 0.5 * box.dims.x() || std::abs(q.y()) > 0.5 * box.dims.y() ||
        std::abs(q.z()) > 0.5 * box.dims.z()) {
      continue;
    }
    auto cell_axis = [s](double coord, double extent) {
      const int i = static_cast<int>(std::floor((coord / extent + 0.5) * s));
      return std::min(std::max(i, 0), s - 1);
    };
    const int ix = cell_axis(q.x(), box.dims.x());
    const int iy = cell_axis(q.y(), box.dims.y());
    const int iz = cell_axis(q.z(), box.dims.z());
    const int cell = ix + iy * s + iz * s * s;
    roi.voxel_pooled.row(cell) += inputs.voxel_features.row(static_cast<Eigen::Index>(k));
    roi.cell_count[static_cast<std::size_t>(cell)] += 1;
    if (inputs.event_valid[k]) {
      roi.event_pooled.row(cell) += inputs.event_features.row(static_cast<Eigen::Index>(k));
      roi.event_cell_count[static_cast<std::size_t>(cell)] += 1;
    }
  }
  for (int cell = 0; cell < cells; ++cell) {
    if (roi.cell_count[static_cast<std::size_t>(cell)] > 0) {
      roi.voxel_pooled.row(cell) /= roi.cell_count[static_cast<std::size_t>(cell)];
    }
    if (roi.event_cell_count[static_cast<std::size_t>(cell)] > 0) {
      roi.event_pooled.row(cell) /= roi.event_cell_count[static_cast<std::size_t>(cell)];
    }
  }
  return roi;
}

std::vector<RoiGridFeatures> roi_grid_pool(std::span<const BoxProposal> proposals,
                                           const SparseVoxelGrid& grid,
                                           const VirtualEventFeatures& vef,
                                           int grid_size) {
  if (static_cast<std::size_t>(vef.features.rows()) != grid.size()) {
    throw std::invalid_argument("roi_grid_pool: feature rows must match voxel count");
  }
  FusionInputs inputs;
  inputs.centroids.reserve(grid.size());
  const int cv = grid.entries().empty() ? 0 : static_cast<int>(grid.entries().front().feature.size());
  inputs.voxel_features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), cv);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    inputs.centroids.push_back(grid.entries()[k].centroid);
    inputs.voxel_features.row(static_cast<Eigen::Index>(k)) = grid.entries()[k].feature;
  }
  inputs.event_features = vef.features;
  inputs.event_valid = vef.valid;
  std::vector<RoiGridFeatures> out;
  out.reserve(proposals.size());
  for (const auto& p : proposals) {
    out.push_back(roi_grid_pool_box(p.box, inputs, grid_size));
  }
  return out;
}

Eigen::VectorXd ImplicitMotionField::flatten() const {
  // Column-major data with one column per cell, so the flat vector is
  // [cell0 channels, cell1 channels, ...].
  return Eigen::Map<const Eigen::VectorXd>(cells.data(), cells.size());
}

ImplicitMotionField fuse_motion_field(const RoiGridFeatures& roi, const MlpParams& fusion_mlp) {
  const int ce = static_cast<int>(roi.event_pooled.cols());
  const int cv = static_cast<int>(roi.voxel_pooled.cols());
  if (fusion_mlp.input_width() != ce + cv) {
    throw std::invalid_argument("fuse_motion_field: MLP input width must equal the concatenated branch width");
  }
  const int cells = static_cast<int>(roi.event_pooled.rows());
  Eigen::MatrixXd x(ce + cv, cells);
  x.topRows(ce) = roi.event_pooled.transpose();
  x.bottomRows(cv) = roi.voxel_pooled.transpose();
  ImplicitMotionField field;
  field.cells = mlp_forward(fusion_mlp, x);
  return field;
}

MotionVector predict_motion(const ImplicitMotionField& field, const MlpParams& motion_mlp) {
  const Eigen::VectorXd y = mlp_forward_vec(motion_mlp, field.flatten());
  if (y.size() != 4) {
    throw std::invalid_argument("predict_motion: head must output 4 values");
  }
  MotionVector m;
  m.dx = y[0];
  m.dy = y[1];
  m.dz = y[2];
  m.dyaw = wrap_angle(y[3]);
  return m;
}

double predict_confidence(const ImplicitMotionField& field, const MlpParams& conf_mlp) {
  const Eigen::VectorXd y = mlp_forward_vec(conf_mlp, field.flatten());
  if (y.size() != 1) {
    throw std::invalid_argument("predict_confidence: head must output 1 value");
  }
  return logistic(y[0]);
}

Box3D apply_motion(const Box3D& b0, const MotionVector& m) {
  const double c = std::cos(b0.yaw), s = std::sin(b0.yaw);
  const Vec3 shift(c * m.dx - s * m.dy, s * m.dx + c * m.dy, m.dz);
  return Box3D(b0.center + shift, b0.dims, wrap_angle(b0.yaw + m.dyaw));
}

double combine_score(double p0, double p_motion) {
  if (!(p0 >= 0.0 && p0 <= 1.0) || !(p_motion >= 0.0 && p_motion <= 1.0)) {
    throw std::invalid_argument("combine_score: inputs must be in [0, 1]");
  }
  return p0 * p_motion;
}

void ModelParams::validate() const {
  fusion_mlp.validate();
  motion_mlp.validate();
  conf_mlp.validate();
  if (fusion_mlp.input_width() != event_channels() + voxel_channels()) {
    throw std::invalid_argument("ModelParams: fusion input width mismatch");
  }
  const int cells = roi_grid_size * roi_grid_size * roi_grid_size;
  if (motion_mlp.input_width() != cells * field_channels() ||
      conf_mlp.input_width() != cells * field_channels()) {
    throw std::invalid_argument("ModelParams: head input width mismatch");
  }
  if (motion_mlp.output_width() != 4 || conf_mlp.output_width() != 1) {
    throw std::invalid_argument("ModelParams: head output width mismatch");
  }
}

std::vector<BoxProposal> blind_time_detect(std::span<const BoxProposal> proposals,
                                           const SparseVoxelGrid& grid,
                                           const EventStream& events,
                                           const CameraModel& cam,
                                           const ModelParams& params, double t) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw std::invalid_argument("blind_time_detect: t must be in [0, 1)");
  }
  std::vector<BoxProposal> out(proposals.begin(), proposals.end());
  if (t == 0.0) {
    return out;  // active timestamp: no blind interval, nothing to update
  }
  const auto sliced = slice_events(events, 0.0, t);
  const EventVoxelGrid egrid =
      build_event_voxel_grid(sliced, params.event_encoder.bins, events.height(), events.width(), 0.0, t);
  const EventFeatureMap emap = encode_event_features(params.event_encoder, egrid);
  const FusionInputs inputs = params.use_non_empty_mask
                                  ? make_fusion_inputs(grid, cam, emap)
                                  : make_fusion_inputs_all_cells(grid, cam, emap);
  for (auto& proposal : out) {
    const RoiGridFeatures roi = roi_grid_pool_box(proposal.box, inputs, params.roi_grid_size);
    const ImplicitMotionField field = fuse_motion_field(roi, params.fusion_mlp);
    const MotionVector m = predict_motion(field, params.motion_mlp);
    const double conf = predict_confidence(field, params.conf_mlp);
    proposal.box = apply_motion(proposal.box, m);
    proposal.score = combine_score(proposal.score, conf);
  }
  return out;
}

}  // namespace evdet
