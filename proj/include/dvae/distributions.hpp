#ifndef DVAE_DISTRIBUTIONS_HPP
#define DVAE_DISTRIBUTIONS_HPP

// Probability kernels: Bernoulli and categorical PMFs, categorical sampling,
// entropy, cross-entropy, binary cross-entropy and their aggregate (summed)
// forms. All logarithms are natural.
//
// Any probability that enters a logarithm is clipped to [kProbClip, 1 - kProbClip]
// (or >= kProbClip for plain cross-entropy). Stored values are never clipped.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "dvae/errors.hpp"
#include "dvae/rng.hpp"
#include "dvae/tensor.hpp"

namespace dvae {

inline constexpr double kProbClip = 1e-7;

template <typename Scalar>
Scalar clip_probability(Scalar p) {
  return std::clamp(p, Scalar(kProbClip), Scalar(1) - Scalar(kProbClip));
}

/// Throws DomainError unless every entry is in [0,1] and the entries sum to 1
/// within `tolerance`.
template <typename Derived>
void check_prob_vector(const Eigen::MatrixBase<Derived>& p, double tolerance = 1e-9) {
  if (p.size() == 0) throw DomainError("probability vector is empty");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double v = static_cast<double>(p(i));
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("probability entry " + std::to_string(i) + " = " + std::to_string(v) +
                        " outside [0,1]");
    }
  }
  const double total = static_cast<double>(p.sum());
  if (std::abs(total - 1.0) > tolerance) {
    throw DomainError("probability vector sums to " + std::to_string(total));
  }
}

/// x ln p + (1-x) ln(1-p) for x in {0,1}.
template <typename Scalar>
Scalar bernoulli_log_pmf(int x, Scalar p) {
  if (x != 0 && x != 1) throw DomainError("bernoulli_log_pmf: x must be 0 or 1");
  if (!(p >= Scalar(0) && p <= Scalar(1))) {
    throw DomainError("bernoulli_log_pmf: p = " + std::to_string(static_cast<double>(p)) +
                      " outside [0,1]");
  }
  const Scalar q = clip_probability(p);
  return x == 1 ? std::log(q) : std::log(Scalar(1) - q);
}

/// Inverse-CDF draw: one uniform, cumulative sums accumulated left to right.
/// If rounding leaves the uniform above the final cumulative sum, the last
/// category with nonzero mass is returned.
template <typename Derived>
Eigen::Index categorical_sample(const Eigen::MatrixBase<Derived>& p, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const double u = rng.uniform();
  Scalar cumulative = 0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > Scalar(0)) last_positive = i;
    cumulative += p(i);
    if (u < cumulative) return i;
  }
  return last_positive;
}

/// Shannon entropy in nats with 0 ln 0 = 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > Scalar(0)) h -= p(i) * std::log(p(i));
  }
  return h;
}

/// -sum a_i ln b_i, with b clipped from below.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cross_entropy(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw DimensionError("cross_entropy: lengths differ, " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  Scalar ce = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    ce -= a(i) * std::log(std::max(b(i), Scalar(kProbClip)));
  }
  return ce;
}

/// Binary cross-entropy of a scalar prediction against a target in [0,1].
template <typename Scalar>
Scalar bce(Scalar target, Scalar prediction) {
  const Scalar q = clip_probability(prediction);
  return -target * std::log(q) - (Scalar(1) - target) * std::log(Scalar(1) - q);
}

/// Sum of per-row entropies of a D x K matrix of row distributions.
template <typename Derived>
typename Derived::Scalar aggregate_entropy(const Eigen::MatrixBase<Derived>& rows) {
  typename Derived::Scalar total = 0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) total += entropy(rows.row(r));
  return total;
}

/// Sum over pixels of bce(target_p, prediction_p).
template <typename DerivedP, typename DerivedT>
typename DerivedP::Scalar aggregate_bce(const Eigen::MatrixBase<DerivedP>& predictions,
                                        const Eigen::MatrixBase<DerivedT>& targets) {
  using Scalar = typename DerivedP::Scalar;
  if (predictions.size() != targets.size()) {
    throw DimensionError("aggregate_bce: lengths differ, " + std::to_string(predictions.size()) +
                         " vs " + std::to_string(targets.size()));
  }
  Scalar total = 0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    total += bce<Scalar>(targets(i), predictions(i));
  }
  return total;
}

/// KL(p || uniform_K) in closed form: ln K - H(p).
template <typename Derived>
typename Derived::Scalar kl_categorical_vs_uniform(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  return std::log(static_cast<Scalar>(p.size())) - entropy(p);
}

}  // namespace dvae

#endif  // DVAE_DISTRIBUTIONS_HPP
