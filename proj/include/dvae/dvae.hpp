#ifndef DVAE_DVAE_HPP
#define DVAE_DVAE_HPP

// Discrete VAE with D categorical latents of K categories each.
//
// Naming: phi is the encoder f_phi : {0,1}^P -> simplex^{D x K} and theta is
// the decoder g_theta : {0,1}^{D x K} -> (0,1)^P. (Some derivations in the
// literature swap the two letters between sections; this code keeps one
// convention throughout.)

#include <utility>
#include <vector>

#include "dvae/network.hpp"
#include "dvae/rng.hpp"
#include "dvae/tensor.hpp"

namespace dvae {

/// Encoder output for one example: D rows, each a distribution over K.
struct CategoricalParams {
  MatrixX probs;

  Eigen::Index latents() const { return probs.rows(); }
  Eigen::Index categories() const { return probs.cols(); }
};

/// One-hot D x K latent together with the sampled index of each row.
struct LatentSample {
  MatrixX one_hot;
  std::vector<int> indices;

  static LatentSample from_indices(const std::vector<int>& indices, Eigen::Index categories);

  /// Row-major flattening, the decoder's input layout.
  VectorX flatten() const;
};

/// Single-sample ELBO estimate split into its three terms.
struct ElboBreakdown {
  double entropy_term = 0.0;  // aggregate entropy of the encoder output
  double prior_term = 0.0;    // -D ln K
  double recon_term = 0.0;    // -aggregate BCE of the reconstruction
  double total = 0.0;

  static ElboBreakdown from_terms(double entropy_term, double prior_term, double recon_term) {
    return {entropy_term, prior_term, recon_term, entropy_term + prior_term + recon_term};
  }
};

struct GradientReport {
  VectorX encoder_grads;
  VectorX decoder_grads;
  double mc_coefficient = 0.0;  // -aggregate BCE, held constant in the score term
  double log_q = 0.0;
};

struct ModelShape {
  Eigen::Index pixels = 0;      // P
  Eigen::Index latents = 0;     // D
  Eigen::Index categories = 0;  // K
  Eigen::Index hidden = 512;    // 0 means no hidden layer
};

LatentSample sample_latent(const CategoricalParams& params, Rng& rng);

/// sum_d ln probs[d][k(d)], each probability clipped below at kProbClip.
double log_q(const CategoricalParams& params, const LatentSample& z);

/// Entropy - D ln K - BCE(xhat, x) for one decoded sample.
ElboBreakdown elbo_estimate(const VectorX& x, const CategoricalParams& params, const VectorX& xhat);

/// Gradient of the aggregate entropy with respect to the softmax logits of a
/// D x K block of probabilities, returned as a D x K matrix.
MatrixX entropy_logit_gradient(const MatrixX& probs);

/// Gradient of sum_d ln(clip(probs[d][k(d)])) with respect to the softmax
/// logits. Rows whose selected probability is clipped contribute zero.
MatrixX log_q_logit_gradient(const MatrixX& probs, const std::vector<int>& indices);

class DiscreteVae {
 public:
  /// Zero-initialized encoder and decoder.
  explicit DiscreteVae(const ModelShape& shape);

  /// Fan-scaled random weights for both networks (encoder drawn first).
  void initialize(Rng& rng);

  const ModelShape& shape() const { return shape_; }
  Mlp& encoder() { return encoder_; }
  Mlp& decoder() { return decoder_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }

  CategoricalParams encode(const VectorX& x);
  VectorX decode(const LatentSample& z);

  /// Batch forms: rows are examples. encode_batch returns batch x (D*K).
  MatrixX encode_batch(const MatrixX& images);
  MatrixX decode_batch(const MatrixX& latents);

  /// One full estimator pass over every row of `images`: encode, draw
  /// `mc_samples` latents per example, decode, and add the per-example
  /// gradient estimates (averaged over the samples, summed over rows) into
  /// the network accumulators. The score-function coefficient is treated as a
  /// constant; nothing flows from the decoder into the encoder through z.
  /// Returns the per-example ELBO estimates (averaged over the samples).
  std::vector<ElboBreakdown> accumulate_gradients(const MatrixX& images, Rng& rng,
                                                  int mc_samples = 1);

  /// Single-example, single-sample pass. Zeroes the accumulators first and
  /// leaves this example's gradients in them.
  std::pair<GradientReport, ElboBreakdown> compute_gradients(const VectorX& x, Rng& rng);

  void zero_grads();

 private:
  ModelShape shape_;
  Mlp encoder_;
  Mlp decoder_;
};

}  // namespace dvae

#endif  // DVAE_DVAE_HPP
