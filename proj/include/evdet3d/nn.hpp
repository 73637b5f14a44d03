#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace evdet {

enum class Activation { relu, identity, logistic };

double logistic(double z);

// Fully connected network. Layer l maps width[l] -> width[l+1] via
// y = act(W x + b); inputs/outputs are column-batched matrices.
struct MlpLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation{Activation::identity};
};

struct MlpParams {
  std::vector<MlpLayer> layers;

  int input_width() const;
  int output_width() const;
  void validate() const;  // adjacent widths must match, values finite

  // Random Gaussian init with 1/sqrt(in) scaling, deterministic per seed.
  static MlpParams make(const std::vector<int>& widths, Activation hidden,
                        Activation output, std::uint64_t seed);
};

struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;   // a_0 .. a_{L-1}
  std::vector<Eigen::MatrixXd> preacts;  // z_1 .. z_L
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static MlpGradients zeros_like(const MlpParams& p);
  void accumulate(const MlpGradients& g);
};

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, MlpCache* cache = nullptr);
Eigen::VectorXd mlp_forward_vec(const MlpParams& p, const Eigen::VectorXd& x, MlpCache* cache = nullptr);

// Exact reverse-mode gradients; returns dL/dx, fills parameter gradients.
Eigen::MatrixXd mlp_backward(const MlpParams& p, const MlpCache& cache,
                             const Eigen::MatrixXd& dy, MlpGradients& grads);

// Eq-weighting of the two blind-time loss terms.
struct LossWeights {
  double lambda_reg{1.0};
  double lambda_score{1.0};
};

// Smooth-L1 with beta = 1 over a residual vector; value and d/dr.
double smooth_l1(const Eigen::VectorXd& r, Eigen::VectorXd* grad = nullptr);

struct ScalarLoss {
  double value{0.0};
  double grad{0.0};
};

// Binary cross entropy; p_pred clamped to [1e-7, 1 - 1e-7].
ScalarLoss score_loss(double p_pred, double p_target);

// Piecewise-linear confidence target: 0 below theta_low, 1 at or above
// theta_high, linear ramp in between.
double iou_target(double iou, double theta_low, double theta_high);

// Adam optimizer over a flat list of named tensors.
struct AdamConfig {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step{0};

  static AdamState zeros_like(const std::vector<const MlpParams*>& heads);
};

// One Adam update over the concatenated parameter lists of `heads`,
// consuming gradients in the same order.
void adam_update(std::vector<MlpParams*> heads,
                 const std::vector<const MlpGradients*>& grads,
                 AdamState& state, const AdamConfig& cfg);

}  // namespace evdet
