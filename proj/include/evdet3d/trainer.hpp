#pragma once

#include "evdet3d/fusion.hpp"
#include "evdet3d/nn.hpp"

#include <optional>
#include <span>
#include <vector>

namespace evdet {

// One supervised example: frozen pooled branch features for a proposal at
// blind time t, plus the matching ground-truth box.
struct TrainSample {
  RoiGridFeatures pooled;
  Box3D proposal_box;
  double p0{1.0};
  Box3D gt_box;
  double t{0.0};
};

struct RegLoss {
  double value{0.0};
  Eigen::Vector4d grad{Eigen::Vector4d::Zero()};  // d/d(dx, dy, dz, dyaw)
};

// Smooth-L1 over (world-frame center residual, sin/cos-encoded yaw residual)
// between the motion-shifted proposal and the ground truth. Dims are not
// predicted and carry no residual.
RegLoss reg_loss(const Box3D& b0, const MotionVector& m, const Box3D& gt);

struct BatchLoss {
  double total{0.0};
  double reg{0.0};
  double score{0.0};
};

// Mean loss over the batch plus exact gradients for the fusion, motion, and
// confidence heads. Confidence targets are treated as constants: pass
// `fixed_targets` to reuse previously computed ones (finite-difference
// checks), or leave it null to derive them from the current prediction via
// iou_target (training). `out_targets` receives the targets actually used.
BatchLoss batch_loss_and_gradients(const ModelParams& params,
                                   std::span<const TrainSample> batch,
                                   const LossWeights& weights,
                                   double theta_low, double theta_high,
                                   const std::vector<double>* fixed_targets,
                                   MlpGradients* fusion_grads,
                                   MlpGradients* motion_grads,
                                   MlpGradients* conf_grads,
                                   std::vector<double>* out_targets = nullptr);

struct TrainHyper {
  AdamConfig adam;
  LossWeights weights;
  double theta_low{0.25};
  double theta_high{0.75};
};

// One Adam step over the three heads; throws on non-finite loss.
BatchLoss train_step(ModelParams& params, std::span<const TrainSample> batch,
                     const TrainHyper& hyper, AdamState& state);

}  // namespace evdet
