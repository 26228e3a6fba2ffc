#include "dvae/dvae.hpp"

#include <cmath>
#include <string>

#include "dvae/distributions.hpp"
#include "dvae/errors.hpp"

namespace dvae {
namespace {

std::vector<Eigen::Index> layer_extents(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
  if (hidden > 0) return {in, hidden, out};
  return {in, out};
}

void check_shape(const ModelShape& shape) {
  if (shape.pixels <= 0 || shape.latents <= 0 || shape.categories <= 0 || shape.hidden < 0) {
    throw ConfigError("model shape must have positive P, D, K and nonnegative hidden width");
  }
}

Eigen::Map<const MatrixX> as_blocks(const MatrixX& flat, Eigen::Index row, Eigen::Index d,
                                    Eigen::Index k) {
  return Eigen::Map<const MatrixX>(flat.row(row).data(), d, k);
}

}  // namespace

LatentSample LatentSample::from_indices(const std::vector<int>& indices, Eigen::Index categories) {
  LatentSample z;
  z.indices = indices;
  z.one_hot = MatrixX::Zero(static_cast<Eigen::Index>(indices.size()), categories);
  for (std::size_t d = 0; d < indices.size(); ++d) {
    if (indices[d] < 0 || indices[d] >= categories) {
      throw DomainError("latent index " + std::to_string(indices[d]) + " outside [0," +
                        std::to_string(categories) + ")");
    }
    z.one_hot(static_cast<Eigen::Index>(d), indices[d]) = 1.0;
  }
  return z;
}

VectorX LatentSample::flatten() const {
  return Eigen::Map<const VectorX>(one_hot.data(), one_hot.size());
}

LatentSample sample_latent(const CategoricalParams& params, Rng& rng) {
  std::vector<int> indices(static_cast<std::size_t>(params.latents()));
  for (Eigen::Index d = 0; d < params.latents(); ++d) {
    indices[static_cast<std::size_t>(d)] =
        static_cast<int>(categorical_sample(params.probs.row(d), rng));
  }
  return LatentSample::from_indices(indices, params.categories());
}

double log_q(const CategoricalParams& params, const LatentSample& z) {
  if (static_cast<Eigen::Index>(z.indices.size()) != params.latents()) {
    throw DimensionError("log_q: sample has " + std::to_string(z.indices.size()) +
                         " latents, params have " + std::to_string(params.latents()));
  }
  double total = 0.0;
  for (Eigen::Index d = 0; d < params.latents(); ++d) {
    total += std::log(std::max(params.probs(d, z.indices[static_cast<std::size_t>(d)]), kProbClip));
  }
  return total;
}

ElboBreakdown elbo_estimate(const VectorX& x, const CategoricalParams& params,
                            const VectorX& xhat) {
  const double d = static_cast<double>(params.latents());
  const double k = static_cast<double>(params.categories());
  return ElboBreakdown::from_terms(aggregate_entropy(params.probs), -d * std::log(k),
                                   -aggregate_bce(xhat, x));
}

MatrixX entropy_logit_gradient(const MatrixX& probs) {
  // dH/dz_j = -p_j (ln p_j + H) per row, with p ln p -> 0 as p -> 0.
  MatrixX grad(probs.rows(), probs.cols());
  for (Eigen::Index d = 0; d < probs.rows(); ++d) {
    const double h = entropy(probs.row(d));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(d, j);
      grad(d, j) = p > 0.0 ? -p * (std::log(p) + h) : 0.0;
    }
  }
  return grad;
}

MatrixX log_q_logit_gradient(const MatrixX& probs, const std::vector<int>& indices) {
  // d ln p_k / dz_j = [j == k] - p_j, unless p_k sits in the clipped region.
  MatrixX grad = MatrixX::Zero(probs.rows(), probs.cols());
  for (Eigen::Index d = 0; d < probs.rows(); ++d) {
    const int k = indices[static_cast<std::size_t>(d)];
    if (probs(d, k) < kProbClip) continue;
    grad.row(d) = -probs.row(d);
    grad(d, k) += 1.0;
  }
  return grad;
}

DiscreteVae::DiscreteVae(const ModelShape& shape)
    : shape_((check_shape(shape), shape)),
      encoder_(layer_extents(shape.pixels, shape.hidden, shape.latents * shape.categories),
               Head::kSoftmax, shape.latents),
      decoder_(layer_extents(shape.latents * shape.categories, shape.hidden, shape.pixels),
               Head::kSigmoid) {}

void DiscreteVae::initialize(Rng& rng) {
  encoder_.initialize(rng);
  decoder_.initialize(rng);
}

CategoricalParams DiscreteVae::encode(const VectorX& x) {
  const VectorX flat = encoder_.forward(x);
  return {Eigen::Map<const MatrixX>(flat.data(), shape_.latents, shape_.categories)};
}

VectorX DiscreteVae::decode(const LatentSample& z) {
  if (z.one_hot.rows() != shape_.latents || z.one_hot.cols() != shape_.categories) {
    throw DimensionError("decode: latent " +
                         detail::shape_string(z.one_hot.rows(), z.one_hot.cols()) +
                         " but model expects " +
                         detail::shape_string(shape_.latents, shape_.categories));
  }
  return decoder_.forward(z.flatten());
}

MatrixX DiscreteVae::encode_batch(const MatrixX& images) { return encoder_.forward(images); }

MatrixX DiscreteVae::decode_batch(const MatrixX& latents) { return decoder_.forward(latents); }

std::vector<ElboBreakdown> DiscreteVae::accumulate_gradients(const MatrixX& images, Rng& rng,
                                                             int mc_samples) {
  if (mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
  const Eigen::Index batch = images.rows();
  const Eigen::Index d = shape_.latents;
  const Eigen::Index k = shape_.categories;
  const double weight = 1.0 / mc_samples;
  const double prior = -static_cast<double>(d) * std::log(static_cast<double>(k));

  const MatrixX probs = encoder_.forward(images);
  MatrixX encoder_logit_grad(batch, d * k);
  std::vector<double> entropies(static_cast<std::size_t>(batch));
  std::vector<double> recon(static_cast<std::size_t>(batch), 0.0);

  for (Eigen::Index b = 0; b < batch; ++b) {
    const MatrixX p = as_blocks(probs, b, d, k);
    entropies[static_cast<std::size_t>(b)] = aggregate_entropy(p);
    const MatrixX g = entropy_logit_gradient(p);
    encoder_logit_grad.row(b) = Eigen::Map<const VectorX>(g.data(), g.size()).transpose();
  }

  MatrixX latents(batch, d * k);
  std::vector<std::vector<int>> indices(static_cast<std::size_t>(batch));
  for (int s = 0; s < mc_samples; ++s) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      CategoricalParams params{as_blocks(probs, b, d, k)};
      LatentSample z = sample_latent(params, rng);
      latents.row(b) = z.flatten().transpose();
      indices[static_cast<std::size_t>(b)] = std::move(z.indices);
    }
    const MatrixX xhat = decoder_.forward(latents);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const double coefficient = -aggregate_bce(xhat.row(b), images.row(b));
      recon[static_cast<std::size_t>(b)] += weight * coefficient;
      const MatrixX score =
          log_q_logit_gradient(as_blocks(probs, b, d, k), indices[static_cast<std::size_t>(b)]);
      encoder_logit_grad.row(b) +=
          (weight * coefficient) * Eigen::Map<const VectorX>(score.data(), score.size()).transpose();
    }
    // d(-BCE)/dlogit = x - sigmoid(logit).
    decoder_.backward_logits(weight * (images - xhat));
  }
  encoder_.backward_logits(encoder_logit_grad);

  std::vector<ElboBreakdown> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (std::size_t b = 0; b < static_cast<std::size_t>(batch); ++b) {
    out.push_back(ElboBreakdown::from_terms(entropies[b], prior, recon[b]));
  }
  return out;
}

std::pair<GradientReport, ElboBreakdown> DiscreteVae::compute_gradients(const VectorX& x,
                                                                        Rng& rng) {
  zero_grads();
  const MatrixX row = x.transpose();

  // Replay the sampling on a copy of the stream so the report can carry the
  // realized log q; the estimator pass below consumes the real stream.
  Rng probe = rng;
  const CategoricalParams params = encode(x);
  const LatentSample z = sample_latent(params, probe);

  const auto breakdowns = accumulate_gradients(row, rng, 1);
  GradientReport report;
  report.encoder_grads = encoder_.gradients();
  report.decoder_grads = decoder_.gradients();
  report.mc_coefficient = breakdowns.front().recon_term;
  report.log_q = log_q(params, z);
  return {report, breakdowns.front()};
}

void DiscreteVae::zero_grads() {
  encoder_.zero_grads();
  decoder_.zero_grads();
}

}  // namespace dvae
