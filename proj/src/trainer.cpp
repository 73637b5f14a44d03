#include "evdet3d/trainer.hpp"

#include <cmath>
#include <stdexcept>

namespace evdet {

RegLoss reg_loss(const Box3D& b0, const MotionVector& m, const Box3D& gt) {
  const Box3D pred = apply_motion(b0, m);
  const double dyaw = wrap_angle(pred.yaw - gt.yaw);
  Eigen::VectorXd r(5);
  r.head<3>() = pred.center - gt.center;
  r[3] = std::sin(dyaw);
  r[4] = std::cos(dyaw) - 1.0;
  Eigen::VectorXd dr;
  RegLoss out;
  out.value = smooth_l1(r, &dr);
  // Center residual back through the box-local shift rotation.
  const double c = std::cos(b0.yaw), s = std::sin(b0.yaw);
  out.grad[0] = c * dr[0] + s * dr[1];
  out.grad[1] = -s * dr[0] + c * dr[1];
  out.grad[2] = dr[2];
  out.grad[3] = dr[3] * std::cos(dyaw) - dr[4] * std::sin(dyaw);
  return out;
}

BatchLoss batch_loss_and_gradients(const ModelParams& params,
                                   std::span<const TrainSample> batch,
                                   const LossWeights& weights,
                                   double theta_low, double theta_high,
                                   const std::vector<double>* fixed_targets,
                                   MlpGradients* fusion_grads,
                                   MlpGradients* motion_grads,
                                   MlpGradients* conf_grads,
                                   std::vector<double>* out_targets) {
  if (batch.empty()) {
    throw std::invalid_argument("batch_loss_and_gradients: empty batch");
  }
  if (fixed_targets && fixed_targets->size() != batch.size()) {
    throw std::invalid_argument("batch_loss_and_gradients: target count mismatch");
  }
  if (out_targets) {
    out_targets->assign(batch.size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int cf = params.field_channels();
  BatchLoss loss;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainSample& sample = batch[i];
    const int ce = static_cast<int>(sample.pooled.event_pooled.cols());
    const int cv = static_cast<int>(sample.pooled.voxel_pooled.cols());
    const int cells = static_cast<int>(sample.pooled.event_pooled.rows());
    Eigen::MatrixXd x(ce + cv, cells);
    x.topRows(ce) = sample.pooled.event_pooled.transpose();
    x.bottomRows(cv) = sample.pooled.voxel_pooled.transpose();

    MlpCache fusion_cache;
    const Eigen::MatrixXd field = mlp_forward(params.fusion_mlp, x, &fusion_cache);
    const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(field.data(), field.size());

    MlpCache motion_cache;
    const Eigen::VectorXd y = mlp_forward_vec(params.motion_mlp, flat, &motion_cache);
    MotionVector m{y[0], y[1], y[2], wrap_angle(y[3])};

    MlpCache conf_cache;
    const double z = mlp_forward_vec(params.conf_mlp, flat, &conf_cache)[0];
    const double p = logistic(z);

    const RegLoss reg = reg_loss(sample.proposal_box, m, sample.gt_box);
    double target;
    if (fixed_targets) {
      target = (*fixed_targets)[i];
    } else {
      const Box3D pred = apply_motion(sample.proposal_box, m);
      target = iou_target(iou_3d(pred, sample.gt_box), theta_low, theta_high);
    }
    if (out_targets) {
      (*out_targets)[i] = target;
    }
    const ScalarLoss bce = score_loss(p, target);

    loss.reg += reg.value * inv_n;
    loss.score += bce.value * inv_n;

    if (!fusion_grads && !motion_grads && !conf_grads) {
      continue;
    }
    Eigen::VectorXd dflat = Eigen::VectorXd::Zero(flat.size());
    if (motion_grads) {
      const Eigen::MatrixXd dy = weights.lambda_reg * inv_n * Eigen::MatrixXd(reg.grad);
      dflat += mlp_backward(params.motion_mlp, motion_cache, dy, *motion_grads).col(0);
    }
    if (conf_grads) {
      Eigen::MatrixXd dz(1, 1);
      dz(0, 0) = weights.lambda_score * inv_n * bce.grad * p * (1.0 - p);
      dflat += mlp_backward(params.conf_mlp, conf_cache, dz, *conf_grads).col(0);
    }
    if (fusion_grads) {
      const Eigen::MatrixXd dfield =
          Eigen::Map<const Eigen::MatrixXd>(dflat.data(), cf, cells);
      mlp_backward(params.fusion_mlp, fusion_cache, dfield, *fusion_grads);
    }
  }
  loss.total = weights.lambda_reg * loss.reg + weights.lambda_score * loss.score;
  return loss;
}

BatchLoss train_step(ModelParams& params, std::span<const TrainSample> batch,
                     const TrainHyper& hyper, AdamState& state) {
  MlpGradients fusion_g = MlpGradients::zeros_like(params.fusion_mlp);
  MlpGradients motion_g = MlpGradients::zeros_like(params.motion_mlp);
  MlpGradients conf_g = MlpGradients::zeros_like(params.conf_mlp);
  const BatchLoss loss = batch_loss_and_gradients(
      params, batch, hyper.weights, hyper.theta_low, hyper.theta_high,
      nullptr, &fusion_g, &motion_g, &conf_g);
  if (!std::isfinite(loss.total)) {
    throw std::runtime_error("train_step: non-finite loss (reg=" + std::to_string(loss.reg) +
                             ", score=" + std::to_string(loss.score) + ")");
  }
  adam_update({&params.fusion_mlp, &params.motion_mlp, &params.conf_mlp},
              {&fusion_g, &motion_g, &conf_g}, state, hyper.adam);
  return loss;
}

}  // namespace evdet
