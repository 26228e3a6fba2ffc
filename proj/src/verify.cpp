#include "dvae/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dvae/distributions.hpp"
#include "dvae/errors.hpp"
#include "dvae/oracle.hpp"

namespace dvae {
namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-4;
constexpr double kFdAbsFloor = 1e-8;

std::string format(const char* fmt, double a, double b) {
  char buf[200];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

// Worst relative error over entries whose magnitude clears the absolute floor.
double worst_relative_error(const VectorX& analytic, const VectorX& numeric, bool& all_ok) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    if (!gradients_agree(analytic(i), numeric(i), kFdRelTol, kFdAbsFloor)) all_ok = false;
    const double scale = std::max(std::abs(analytic(i)), std::abs(numeric(i)));
    if (scale > kFdAbsFloor) {
      worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
    }
  }
  return worst;
}

}  // namespace

DiscreteVae random_tiny_model(const ModelShape& shape, Rng& rng) {
  DiscreteVae model(shape);
  model.initialize(rng);
  for (Mlp* net : {&model.encoder(), &model.decoder()}) {
    for (auto& layer : net->layers()) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform() - 0.5;
    }
  }
  return model;
}

VectorX random_binary_image(Eigen::Index pixels, Rng& rng) {
  VectorX x(pixels);
  for (Eigen::Index i = 0; i < pixels; ++i) x(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return x;
}

bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) <= rel_tol;
}

CheckResult check_gradients(std::uint64_t seed, int networks) {
  Rng rng(seed);
  const ModelShape shape{6, 2, 3, 8};
  bool ok = true;
  double worst_decoder = 0.0;
  double worst_encoder = 0.0;
  for (int n = 0; n < networks; ++n) {
    DiscreteVae model = random_tiny_model(shape, rng);
    const VectorX x = random_binary_image(shape.pixels, rng);

    // Decoder: -aggregate BCE with a frozen latent sample.
    const CategoricalParams params = model.encode(x);
    const LatentSample z = sample_latent(params, rng);
    model.zero_grads();
    const MatrixX xhat = model.decoder().forward(MatrixX(z.flatten().transpose()));
    model.decoder().backward_logits(MatrixX(x.transpose()) - xhat);
    const VectorX decoder_analytic = model.decoder().gradients();
    model.zero_grads();
    const VectorX theta = model.decoder().parameters();
    auto recon = [&](const VectorX& p) {
      model.decoder().set_parameters(p);
      return -aggregate_bce(model.decode(z), x);
    };
    const VectorX decoder_numeric = finite_difference(recon, theta, kFdStep);
    model.decoder().set_parameters(theta);
    worst_decoder =
        std::max(worst_decoder, worst_relative_error(decoder_analytic, decoder_numeric, ok));

    // Encoder: entropy plus exact score term against the exact ELBO.
    const VectorX encoder_analytic = exact_encoder_gradient(model, x);
    const VectorX phi = model.encoder().parameters();
    auto elbo = [&](const VectorX& p) {
      model.encoder().set_parameters(p);
      const EnumerationTable table = enumerate(model, x);
      return exact_elbo(table, model.encode(x));
    };
    const VectorX encoder_numeric = finite_difference(elbo, phi, kFdStep);
    model.encoder().set_parameters(phi);
    worst_encoder =
        std::max(worst_encoder, worst_relative_error(encoder_analytic, encoder_numeric, ok));
  }
  return {"grads", ok,
          format("decoder max rel err %.3e, encoder max rel err %.3e (tol 1e-4, abs floor 1e-8)",
                 worst_decoder, worst_encoder)};
}

CheckResult check_unbiased(std::uint64_t seed, int draws) {
  Rng rng(seed);
  const ModelShape shape{4, 2, 3, 8};
  DiscreteVae model = random_tiny_model(shape, rng);
  const VectorX x = random_binary_image(shape.pixels, rng);
  const VectorX exact = exact_encoder_gradient(model, x);

  VectorX sum = VectorX::Zero(exact.size());
  VectorX sum_sq = VectorX::Zero(exact.size());
  for (int i = 0; i < draws; ++i) {
    const VectorX g = model.compute_gradients(x, rng).first.encoder_grads;
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const double n = static_cast<double>(draws);
  int beyond3 = 0;
  int beyond5 = 0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    const double mean = sum(i) / n;
    const double var = std::max(0.0, (sum_sq(i) - n * mean * mean) / (n - 1.0));
    const double se = std::sqrt(var / n);
    const double diff = std::abs(mean - exact(i));
    // Parameters with no variance (dead units) must agree to rounding.
    const double z = diff <= 1e-12 ? 0.0 : (se > 0.0 ? diff / se : INFINITY);
    worst = std::max(worst, z);
    if (z > 3.0) ++beyond3;
    if (z > 5.0) ++beyond5;
  }
  const auto allowed3 = static_cast<int>(std::floor(0.01 * static_cast<double>(exact.size())));
  const bool ok = beyond5 == 0 && beyond3 <= allowed3;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d draws, %ld params: max |z| %.2f, %d beyond 3 SE (allowed %d), %d beyond 5 SE",
                draws, static_cast<long>(exact.size()), worst, beyond3, allowed3, beyond5);
  return {"unbiased", ok, buf};
}

CheckResult check_bound(std::uint64_t seed, int models) {
  Rng rng(seed);
  const ModelShape shape{6, 2, 3, 8};
  double min_slack = INFINITY;
  double worst_identity = 0.0;
  for (int m = 0; m < models; ++m) {
    DiscreteVae model = random_tiny_model(shape, rng);
    const VectorX x = random_binary_image(shape.pixels, rng);
    const EnumerationTable table = enumerate(model, x);
    const double log_px = exact_marginal_log_px(table, shape.latents, shape.categories);
    const double elbo = exact_elbo(table, model.encode(x));
    min_slack = std::min(min_slack, log_px - elbo);
    worst_identity = std::max(worst_identity, std::abs(log_px - elbo - kl_to_posterior(table)));
  }
  const bool ok = min_slack >= -1e-10 && worst_identity <= 1e-8;
  return {"bound", ok,
          format("min slack log p(x) - ELBO %.3e (>= -1e-10), max identity error %.3e (<= 1e-8)",
                 min_slack, worst_identity)};
}

CheckResult check_kl_closed_form(std::uint64_t seed, int vectors) {
  Rng rng(seed);
  double worst_gap = 0.0;
  double min_kl = INFINITY;
  for (int v = 0; v < vectors; ++v) {
    const auto k = static_cast<Eigen::Index>(2 + rng.below(15));
    VectorX p(k);
    for (Eigen::Index i = 0; i < k; ++i) p(i) = -std::log(1.0 - rng.uniform());
    p /= p.sum();
    double direct = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (p(i) > 0.0) direct += p(i) * std::log(static_cast<double>(k) * p(i));
    }
    const double closed = kl_categorical_vs_uniform(p);
    worst_gap = std::max(worst_gap, std::abs(closed - direct));
    min_kl = std::min(min_kl, closed);
  }
  const bool ok = worst_gap <= 1e-12 && min_kl >= -1e-12;
  return {"kl", ok,
          format("max |closed - direct| %.3e (<= 1e-12), min KL %.3e (>= -1e-12)", worst_gap,
                 min_kl)};
}

CheckResult check_elbo_consistency(std::uint64_t seed, int draws) {
  Rng rng(seed);
  const ModelShape shape{4, 2, 3, 8};
  DiscreteVae model = random_tiny_model(shape, rng);
  const VectorX x = random_binary_image(shape.pixels, rng);
  const CategoricalParams params = model.encode(x);
  const double exact = exact_elbo(enumerate(model, x), params);

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const LatentSample z = sample_latent(params, rng);
    const double total = elbo_estimate(x, params, model.decode(z)).total;
    sum += total;
    sum_sq += total * total;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double se = std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) / n);
  const double z = std::abs(mean - exact) / se;
  return {"elbo", z <= 5.0,
          format("|mean - exact| = %.2f SE (<= 5), exact ELBO %.6f", z, exact)};
}

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "grads") return {check_gradients(seed)};
  if (suite == "unbiased") return {check_unbiased(seed)};
  if (suite == "bound") return {check_bound(seed)};
  if (suite == "kl") return {check_kl_closed_form(seed)};
  if (suite == "elbo") return {check_elbo_consistency(seed)};
  if (suite == "all") {
    return {check_gradients(seed), check_unbiased(seed), check_bound(seed),
            check_kl_closed_form(seed), check_elbo_consistency(seed)};
  }
  throw ConfigError("unknown verification suite '" + suite + "'");
}

}  // namespace dvae
