#include "evdet3d/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace evdet {

double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::logistic:
      return z.unaryExpr([](double v) { return logistic(v); });
  }
  throw std::logic_error("unknown activation");
}

Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::identity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::relu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::logistic:
      return z.unaryExpr([](double v) {
        const double s = logistic(v);
        return s * (1.0 - s);
      });
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

int MlpParams::input_width() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int MlpParams::output_width() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

void MlpParams::validate() const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weight.rows()) {
      throw std::invalid_argument("MlpParams: bias/weight shape mismatch");
    }
    if (l > 0 && layers[l - 1].weight.rows() != layer.weight.cols()) {
      throw std::invalid_argument("MlpParams: adjacent layer widths do not match");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw std::invalid_argument("MlpParams: non-finite parameter");
    }
  }
}

MlpParams MlpParams::make(const std::vector<int>& widths, Activation hidden,
                          Activation output, std::uint64_t seed) {
  if (widths.size() < 2) {
    throw std::invalid_argument("MlpParams::make: need at least input and output widths");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MlpParams p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpLayer layer;
    const int in = widths[l];
    const int out = widths[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) {
        layer.weight(r, c) = gauss(rng) * scale;
      }
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = (l + 2 == widths.size()) ? output : hidden;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpGradients MlpGradients::zeros_like(const MlpParams& p) {
  MlpGradients g;
  for (const auto& layer : p.layers) {
    g.weight.emplace_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return g;
}

void MlpGradients::accumulate(const MlpGradients& g) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += g.weight[l];
    bias[l] += g.bias[l];
  }
}

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x, MlpCache* cache) {
  if (x.rows() != p.input_width()) {
    throw std::invalid_argument("mlp_forward: input width mismatch");
  }
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  Eigen::MatrixXd a = x;
  for (const auto& layer : p.layers) {
    if (cache) {
      cache->inputs.push_back(a);
    }
    Eigen::MatrixXd z = (layer.weight * a).colwise() + layer.bias;
    if (cache) {
      cache->preacts.push_back(z);
    }
    a = apply_activation(layer.activation, z);
  }
  return a;
}

Eigen::VectorXd mlp_forward_vec(const MlpParams& p, const Eigen::VectorXd& x, MlpCache* cache) {
  return mlp_forward(p, Eigen::MatrixXd(x), cache).col(0);
}

Eigen::MatrixXd mlp_backward(const MlpParams& p, const MlpCache& cache,
                             const Eigen::MatrixXd& dy, MlpGradients& grads) {
  if (cache.inputs.size() != p.layers.size()) {
    throw std::invalid_argument("mlp_backward: cache does not match network");
  }
  Eigen::MatrixXd d = dy;
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = p.layers[l];
    const Eigen::MatrixXd dz = d.cwiseProduct(activation_grad(layer.activation, cache.preacts[l]));
    grads.weight[l] += dz * cache.inputs[l].transpose();
    grads.bias[l] += dz.rowwise().sum();
    d = layer.weight.transpose() * dz;
  }
  return d;
}

double smooth_l1(const Eigen::VectorXd& r, Eigen::VectorXd* grad) {
  double total = 0.0;
  if (grad) {
    grad->resize(r.size());
  }
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double v = r[i];
    const double a = std::abs(v);
    if (a < 1.0) {
      total += 0.5 * v * v;
      if (grad) {
        (*grad)[i] = v;
      }
    } else {
      total += a - 0.5;
      if (grad) {
        (*grad)[i] = v > 0.0 ? 1.0 : -1.0;
      }
    }
  }
  return total;
}

ScalarLoss score_loss(double p_pred, double p_target) {
  if (!(p_target >= 0.0 && p_target <= 1.0)) {
    throw std::invalid_argument("score_loss: target outside [0, 1]");
  }
  const double lo = 1e-7;
  const double p = std::min(1.0 - lo, std::max(lo, p_pred));
  ScalarLoss out;
  out.value = -(p_target * std::log(p) + (1.0 - p_target) * std::log(1.0 - p));
  // Gradient of the clamped expression; zero outside the clamp window.
  if (p_pred > lo && p_pred < 1.0 - lo) {
    out.grad = (p - p_target) / (p * (1.0 - p));
  } else {
    out.grad = 0.0;
  }
  return out;
}

double iou_target(double iou, double theta_low, double theta_high) {
  if (!(theta_low >= 0.0 && theta_low < theta_high && theta_high <= 1.0)) {
    throw std::invalid_argument("iou_target: need 0 <= theta_low < theta_high <= 1");
  }
  if (iou < theta_low) {
    return 0.0;
  }
  if (iou >= theta_high) {
    return 1.0;
  }
  return (iou - theta_low) / (theta_high - theta_low);
}

AdamState AdamState::zeros_like(const std::vector<const MlpParams*>& heads) {
  AdamState s;
  for (const auto* head : heads) {
    for (const auto& layer : head->layers) {
      s.m_w.emplace_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
      s.v_w.emplace_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
      s.m_b.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
      s.v_b.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
  }
  return s;
}

void adam_update(std::vector<MlpParams*> heads,
                 const std::vector<const MlpGradients*>& grads,
                 AdamState& state, const AdamConfig& cfg) {
  if (heads.size() != grads.size()) {
    throw std::invalid_argument("adam_update: heads/gradients size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::size_t k = 0;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    auto& head = *heads[h];
    const auto& g = *grads[h];
    for (std::size_t l = 0; l < head.layers.size(); ++l, ++k) {
      auto step_tensor = [&](auto& param, auto& grad, auto& m, auto& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
        const auto m_hat = m / bc1;
        const auto v_hat = v / bc2;
        param.array() -= cfg.lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
      };
      step_tensor(head.layers[l].weight, g.weight[l], state.m_w[k], state.v_w[k]);
      step_tensor(head.layers[l].bias, g.bias[l], state.m_b[k], state.v_b[k]);
    }
  }
}

}  // namespace evdet
