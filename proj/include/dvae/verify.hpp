#ifndef DVAE_VERIFY_HPP
#define DVAE_VERIFY_HPP

// Self-contained oracle suites run by `dvae verify`. Each check builds small
// random models, compares an estimator or analytic gradient against the
// exact enumeration / finite-difference reference and reports the measured
// worst case next to its tolerance.

#include <cstdint>
#include <string>
#include <vector>

#include "dvae/dvae.hpp"
#include "dvae/rng.hpp"

namespace dvae {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured values and tolerances
};

/// Random weights plus random biases in [-0.5, 0.5].
DiscreteVae random_tiny_model(const ModelShape& shape, Rng& rng);

/// Independent fair coin per pixel.
VectorX random_binary_image(Eigen::Index pixels, Rng& rng);

/// |a - b| <= abs_floor, or |a - b| / max(|a|, |b|) <= rel_tol.
bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_floor);

CheckResult check_gradients(std::uint64_t seed, int networks = 10);
CheckResult check_unbiased(std::uint64_t seed, int draws = 200'000);
CheckResult check_bound(std::uint64_t seed, int models = 100);
CheckResult check_kl_closed_form(std::uint64_t seed, int vectors = 1000);
CheckResult check_elbo_consistency(std::uint64_t seed, int draws = 200'000);

/// Suite names: all, grads, unbiased, bound, kl, elbo. ConfigError otherwise.
std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed);

}  // namespace dvae

#endif  // DVAE_VERIFY_HPP
