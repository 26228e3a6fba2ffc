#include "dvae/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dvae/distributions.hpp"
#include "dvae/errors.hpp"

namespace dvae {

std::size_t latent_space_size(Eigen::Index latents, Eigen::Index categories) {
  std::size_t n = 1;
  for (Eigen::Index d = 0; d < latents; ++d) {
    n *= static_cast<std::size_t>(categories);
    if (n > kMaxEnumeration) {
      throw CapacityError("enumeration of " + std::to_string(categories) + "^" +
                          std::to_string(latents) + " latents exceeds the limit of " +
                          std::to_string(kMaxEnumeration));
    }
  }
  return n;
}

std::vector<int> latent_indices(std::size_t row, Eigen::Index latents, Eigen::Index categories) {
  std::vector<int> idx(static_cast<std::size_t>(latents));
  for (std::size_t d = idx.size(); d-- > 0;) {
    idx[d] = static_cast<int>(row % static_cast<std::size_t>(categories));
    row /= static_cast<std::size_t>(categories);
  }
  return idx;
}

EnumerationTable enumerate(DiscreteVae& model, const VectorX& x) {
  const auto& shape = model.shape();
  const std::size_t n = latent_space_size(shape.latents, shape.categories);
  const CategoricalParams params = model.encode(x);

  EnumerationTable table;
  table.latents.reserve(n);
  table.q_probs.reserve(n);
  MatrixX batch(static_cast<Eigen::Index>(n), shape.latents * shape.categories);
  for (std::size_t i = 0; i < n; ++i) {
    auto z = LatentSample::from_indices(latent_indices(i, shape.latents, shape.categories),
                                        shape.categories);
    double q = 1.0;
    for (Eigen::Index d = 0; d < shape.latents; ++d) {
      q *= params.probs(d, z.indices[static_cast<std::size_t>(d)]);
    }
    batch.row(static_cast<Eigen::Index>(i)) = z.flatten().transpose();
    table.q_probs.push_back(q);
    table.latents.push_back(std::move(z));
  }
  const MatrixX xhat = model.decode_batch(batch);
  table.log_px_given_z.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    table.log_px_given_z.push_back(-aggregate_bce(xhat.row(static_cast<Eigen::Index>(i)), x));
  }
  return table;
}

double exact_marginal_log_px(const EnumerationTable& table, Eigen::Index latents,
                             Eigen::Index categories) {
  const double peak =
      *std::max_element(table.log_px_given_z.begin(), table.log_px_given_z.end());
  double sum = 0.0;
  for (double v : table.log_px_given_z) sum += std::exp(v - peak);
  return peak + std::log(sum) -
         static_cast<double>(latents) * std::log(static_cast<double>(categories));
}

double exact_elbo(const EnumerationTable& table, const CategoricalParams& params) {
  double expected = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    expected += table.q_probs[i] * table.log_px_given_z[i];
  }
  const double d = static_cast<double>(params.latents());
  const double k = static_cast<double>(params.categories());
  return aggregate_entropy(params.probs) - d * std::log(k) + expected;
}

std::vector<double> exact_posterior(const EnumerationTable& table) {
  // The uniform prior cancels in Bayes' rule.
  const double peak =
      *std::max_element(table.log_px_given_z.begin(), table.log_px_given_z.end());
  std::vector<double> post(table.size());
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    post[i] = std::exp(table.log_px_given_z[i] - peak);
    total += post[i];
  }
  for (double& p : post) p /= total;
  return post;
}

double kl_to_posterior(const EnumerationTable& table) {
  const auto post = exact_posterior(table);
  double kl = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double q = table.q_probs[i];
    if (q > 0.0) kl += q * (std::log(q) - std::log(post[i]));
  }
  return kl;
}

VectorX exact_encoder_gradient(DiscreteVae& model, const VectorX& x) {
  const auto& shape = model.shape();
  const EnumerationTable table = enumerate(model, x);
  const CategoricalParams params = model.encode(x);  // refreshes the encoder caches

  MatrixX logit_grad = entropy_logit_gradient(params.probs);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double weight = table.q_probs[i] * table.log_px_given_z[i];
    // Unclipped score: d ln p_k / dz_j = [j == k] - p_j.
    for (Eigen::Index d = 0; d < shape.latents; ++d) {
      const int k = table.latents[i].indices[static_cast<std::size_t>(d)];
      logit_grad.row(d) -= weight * params.probs.row(d);
      logit_grad(d, k) += weight;
    }
  }
  auto& encoder = model.encoder();
  encoder.zero_grads();
  encoder.backward_logits(Eigen::Map<const MatrixX>(logit_grad.data(), 1, logit_grad.size()));
  VectorX grad = encoder.gradients();
  encoder.zero_grads();
  return grad;
}

VectorX exact_decoder_gradient(DiscreteVae& model, const VectorX& x) {
  const auto& shape = model.shape();
  const EnumerationTable table = enumerate(model, x);
  auto& decoder = model.decoder();
  decoder.zero_grads();
  MatrixX batch(static_cast<Eigen::Index>(table.size()), shape.latents * shape.categories);
  for (std::size_t i = 0; i < table.size(); ++i) {
    batch.row(static_cast<Eigen::Index>(i)) = table.latents[i].flatten().transpose();
  }
  const MatrixX xhat = decoder.forward(batch);
  MatrixX logit_grad = (-xhat).rowwise() + x.transpose();
  for (std::size_t i = 0; i < table.size(); ++i) {
    logit_grad.row(static_cast<Eigen::Index>(i)) *= table.q_probs[i];
  }
  decoder.backward_logits(logit_grad);
  VectorX grad = decoder.gradients();
  decoder.zero_grads();
  return grad;
}

VectorX finite_difference(const Objective& objective, const VectorX& params, double h) {
  if (!(h > 0.0)) throw DomainError("finite_difference: step must be positive");
  VectorX grad(params.size());
  VectorX probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe(i) = params(i) + h;
    const double up = objective(probe);
    probe(i) = params(i) - h;
    const double down = objective(probe);
    probe(i) = params(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dvae
