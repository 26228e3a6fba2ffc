#include "dvae/network.hpp"

#include <cmath>
#include <string>

#include "dvae/errors.hpp"

namespace dvae {

LinearLayer::LinearLayer(Eigen::Index in, Eigen::Index out)
    : weights(MatrixX::Zero(out, in)),
      bias(VectorX::Zero(out)),
      grad_weights(MatrixX::Zero(out, in)),
      grad_bias(VectorX::Zero(out)) {}

Mlp::Mlp(const std::vector<Eigen::Index>& extents, Head head, Eigen::Index head_rows)
    : head_(head), head_rows_(head_rows) {
  if (extents.size() < 2) throw ConfigError("Mlp: need at least input and output extents");
  for (auto e : extents) {
    if (e <= 0) throw ConfigError("Mlp: layer extents must be positive");
  }
  if (head_ == Head::kSoftmax && (head_rows_ <= 0 || extents.back() % head_rows_ != 0)) {
    throw ConfigError("Mlp: softmax output width " + std::to_string(extents.back()) +
                      " is not divisible into " + std::to_string(head_rows_) + " rows");
  }
  for (std::size_t i = 0; i + 1 < extents.size(); ++i) {
    layers_.emplace_back(extents[i], extents[i + 1]);
  }
}

void Mlp::initialize(Rng& rng) {
  for (auto& layer : layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.inputs() + layer.outputs()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
    layer.bias.setZero();
  }
}

std::vector<Eigen::Index> Mlp::extents() const {
  std::vector<Eigen::Index> out{layers_.front().inputs()};
  for (const auto& layer : layers_) out.push_back(layer.outputs());
  return out;
}

MatrixX Mlp::apply_head(const MatrixX& logits) const {
  if (head_ == Head::kSigmoid) return sigmoid(logits);
  const Eigen::Index batch = logits.rows();
  const Eigen::Index k = logits.cols() / head_rows_;
  MatrixX out(batch, logits.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::Map<const MatrixX> blocks(logits.row(b).data(), head_rows_, k);
    Eigen::Map<MatrixX>(out.row(b).data(), head_rows_, k) = rowwise_softmax(blocks);
  }
  return out;
}

MatrixX Mlp::forward(const MatrixX& input) {
  if (input.cols() != input_size()) {
    throw DimensionError("Mlp::forward: input width " + std::to_string(input.cols()) +
                         " but first layer expects " + std::to_string(input_size()));
  }
  preactivations_.resize(layers_.size());
  MatrixX activation = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& layer = layers_[i];
    layer.cached_input = activation;
    MatrixX z = activation * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    preactivations_[i] = z;
    if (i + 1 < layers_.size()) {
      activation = z.cwiseMax(0.0);
    } else {
      output_ = apply_head(z);
    }
  }
  has_forward_ = true;
  return output_;
}

VectorX Mlp::forward(const VectorX& input) {
  MatrixX row = input.transpose();
  return forward(row).row(0).transpose();
}

MatrixX Mlp::backward(const MatrixX& upstream) {
  if (!has_forward_) throw StateError("Mlp::backward called before forward");
  if (upstream.rows() != output_.rows() || upstream.cols() != output_.cols()) {
    throw DimensionError("Mlp::backward: upstream " +
                         detail::shape_string(upstream.rows(), upstream.cols()) +
                         " vs output " + detail::shape_string(output_.rows(), output_.cols()));
  }
  MatrixX logit_grad(upstream.rows(), upstream.cols());
  if (head_ == Head::kSigmoid) {
    logit_grad = upstream.cwiseProduct(output_.cwiseProduct((1.0 - output_.array()).matrix()));
  } else {
    // Softmax Jacobian per block: dL/dz_j = p_j (g_j - sum_i p_i g_i).
    const Eigen::Index k = output_.cols() / head_rows_;
    for (Eigen::Index b = 0; b < output_.rows(); ++b) {
      for (Eigen::Index d = 0; d < head_rows_; ++d) {
        const auto p = output_.row(b).segment(d * k, k);
        const auto g = upstream.row(b).segment(d * k, k);
        const double mean_g = p.dot(g);
        logit_grad.row(b).segment(d * k, k) = p.cwiseProduct((g.array() - mean_g).matrix());
      }
    }
  }
  return backward_logits(logit_grad);
}

MatrixX Mlp::backward_logits(const MatrixX& logit_grad) {
  if (!has_forward_) throw StateError("Mlp::backward called before forward");
  if (logit_grad.rows() != output_.rows() || logit_grad.cols() != output_.cols()) {
    throw DimensionError("Mlp::backward_logits: gradient " +
                         detail::shape_string(logit_grad.rows(), logit_grad.cols()) +
                         " vs output " + detail::shape_string(output_.rows(), output_.cols()));
  }
  MatrixX grad = logit_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto& layer = layers_[i];
    if (i + 1 < layers_.size()) {
      // Rectifier subgradient is 0 at exactly 0.
      grad = grad.cwiseProduct((preactivations_[i].array() > 0.0).cast<double>().matrix());
    }
    layer.grad_weights.noalias() += grad.transpose() * layer.cached_input;
    layer.grad_bias.noalias() += grad.colwise().sum().transpose();
    grad = grad * layer.weights;
  }
  return grad;
}

void Mlp::zero_grads() {
  for (auto& layer : layers_) {
    layer.grad_weights.setZero();
    layer.grad_bias.setZero();
  }
}

void Mlp::sga_step(double lr) {
  if (!(lr > 0.0)) throw ConfigError("sga_step: learning rate must be positive");
  for (auto& layer : layers_) {
    layer.weights += lr * layer.grad_weights;
    layer.bias += lr * layer.grad_bias;
  }
}

void Mlp::scale_grads(double factor) {
  for (auto& layer : layers_) {
    layer.grad_weights *= factor;
    layer.grad_bias *= factor;
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

VectorX Mlp::parameters() const {
  VectorX flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& layer : layers_) {
    flat.segment(at, layer.weights.size()) =
        Eigen::Map<const VectorX>(layer.weights.data(), layer.weights.size());
    at += layer.weights.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return flat;
}

void Mlp::set_parameters(const VectorX& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw DimensionError("Mlp::set_parameters: got " + std::to_string(flat.size()) +
                         " values, network has " + std::to_string(parameter_count()));
  }
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    Eigen::Map<VectorX>(layer.weights.data(), layer.weights.size()) =
        flat.segment(at, layer.weights.size());
    at += layer.weights.size();
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
}

VectorX Mlp::gradients() const {
  VectorX flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& layer : layers_) {
    flat.segment(at, layer.grad_weights.size()) =
        Eigen::Map<const VectorX>(layer.grad_weights.data(), layer.grad_weights.size());
    at += layer.grad_weights.size();
    flat.segment(at, layer.grad_bias.size()) = layer.grad_bias;
    at += layer.grad_bias.size();
  }
  return flat;
}

}  // namespace dvae
