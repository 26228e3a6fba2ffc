#ifndef DVAE_ORACLE_HPP
#define DVAE_ORACLE_HPP

// Exact reference computations for tiny models: exhaustive enumeration of all
// K^D latent configurations, the exact marginal likelihood, ELBO, posterior
// and encoder gradient, plus central finite differences. These are the ground
// truth the Monte Carlo estimators are tested against.

#include <cstddef>
#include <functional>
#include <vector>

#include "dvae/dvae.hpp"
#include "dvae/tensor.hpp"

namespace dvae {

inline constexpr std::size_t kMaxEnumeration = 1'000'000;

/// One row per latent configuration, in lexicographic order of the index
/// tuple (k(0), ..., k(D-1)) with d = 0 varying slowest.
struct EnumerationTable {
  std::vector<LatentSample> latents;
  std::vector<double> q_probs;         // q(z|x) = prod_d f(x)[d][k(d)]
  std::vector<double> log_px_given_z;  // -aggregate BCE(g(z), x)

  std::size_t size() const { return q_probs.size(); }
};

/// K^D, or CapacityError when it exceeds kMaxEnumeration.
std::size_t latent_space_size(Eigen::Index latents, Eigen::Index categories);

/// Index tuple of table row `row`.
std::vector<int> latent_indices(std::size_t row, Eigen::Index latents, Eigen::Index categories);

EnumerationTable enumerate(DiscreteVae& model, const VectorX& x);

/// ln sum_z p(x|z) K^-D, via log-sum-exp.
double exact_marginal_log_px(const EnumerationTable& table, Eigen::Index latents,
                             Eigen::Index categories);

/// Aggregate entropy - D ln K + sum_z q(z|x) ln p(x|z).
double exact_elbo(const EnumerationTable& table, const CategoricalParams& params);

/// p(z|x) under the uniform prior.
std::vector<double> exact_posterior(const EnumerationTable& table);

/// KL(q(z|x) || p(z|x)).
double kl_to_posterior(const EnumerationTable& table);

/// Exact gradient of the ELBO with respect to the encoder parameters: the
/// entropy gradient plus sum_z q(z|x) ln p(x|z) grad ln q(z|x). Uses the
/// encoder's accumulators as scratch; they are zero on return.
VectorX exact_encoder_gradient(DiscreteVae& model, const VectorX& x);

/// Exact gradient of E_q[ln p(x|z)] with respect to the decoder parameters.
/// Uses the decoder's accumulators as scratch; they are zero on return.
VectorX exact_decoder_gradient(DiscreteVae& model, const VectorX& x);

using Objective = std::function<double(const VectorX&)>;

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every i.
VectorX finite_difference(const Objective& objective, const VectorX& params, double h);

}  // namespace dvae

#endif  // DVAE_ORACLE_HPP
