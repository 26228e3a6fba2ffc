#ifndef DVAE_NETWORK_HPP
#define DVAE_NETWORK_HPP

// Fully connected networks with hand-written reverse mode. Rows of every
// input matrix are independent examples; parameter gradients are summed over
// the rows of the upstream gradient and accumulated into the layer.

#include <cstddef>
#include <vector>

#include "dvae/rng.hpp"
#include "dvae/tensor.hpp"

namespace dvae {

struct LinearLayer {
  MatrixX weights;  // out x in
  VectorX bias;     // out
  MatrixX grad_weights;
  VectorX grad_bias;
  MatrixX cached_input;  // batch x in, from the last forward

  LinearLayer(Eigen::Index in, Eigen::Index out);

  Eigen::Index inputs() const { return weights.cols(); }
  Eigen::Index outputs() const { return weights.rows(); }
};

enum class Head {
  kSoftmax,  // each output row is split into `head_rows` categorical blocks
  kSigmoid,
};

class Mlp {
 public:
  /// `extents` lists the layer widths from input to output, so {in, out} is a
  /// single affine map and {in, h, out} has one rectified hidden layer.
  /// For a softmax head the output width must be divisible by `head_rows`.
  /// Parameters start at zero; call initialize() for random weights.
  Mlp(const std::vector<Eigen::Index>& extents, Head head, Eigen::Index head_rows = 1);

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  void initialize(Rng& rng);

  /// Batch forward: input is batch x in, result batch x out.
  MatrixX forward(const MatrixX& input);
  VectorX forward(const VectorX& input);

  /// Upstream gradient with respect to the head output (batch x out).
  /// Accumulates parameter gradients and returns the input gradient.
  MatrixX backward(const MatrixX& upstream);

  /// Same as backward() but the upstream gradient is taken with respect to the
  /// pre-head logits, bypassing the head Jacobian.
  MatrixX backward_logits(const MatrixX& logit_grad);

  void zero_grads();

  /// Gradient ascent: p <- p + lr * grad. lr must be positive.
  void sga_step(double lr);

  void scale_grads(double factor);

  Head head() const { return head_; }
  Eigen::Index head_rows() const { return head_rows_; }
  Eigen::Index input_size() const { return layers_.front().inputs(); }
  Eigen::Index output_size() const { return layers_.back().outputs(); }
  std::vector<Eigen::Index> extents() const;

  std::vector<LinearLayer>& layers() { return layers_; }
  const std::vector<LinearLayer>& layers() const { return layers_; }

  // Flat views in layer order; within a layer, row-major weights then bias.
  std::size_t parameter_count() const;
  VectorX parameters() const;
  void set_parameters(const VectorX& flat);
  VectorX gradients() const;

 private:
  MatrixX apply_head(const MatrixX& logits) const;

  std::vector<LinearLayer> layers_;
  Head head_;
  Eigen::Index head_rows_;
  std::vector<MatrixX> preactivations_;  // one per layer, from the last forward
  MatrixX output_;
  bool has_forward_ = false;
};

}  // namespace dvae

#endif  // DVAE_NETWORK_HPP
