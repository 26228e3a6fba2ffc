#include "dvae/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "dvae/distributions.hpp"
#include "dvae/errors.hpp"

namespace dvae {
namespace {

constexpr Eigen::Index kEvalChunk = 256;

bool finite(const ElboBreakdown& e) {
  return std::isfinite(e.entropy_term) && std::isfinite(e.prior_term) &&
         std::isfinite(e.recon_term) && std::isfinite(e.total);
}

}  // namespace

void TrainConfig::validate() const {
  if (d_latents < 1) throw ConfigError("d_latents must be positive");
  if (k_categories < 1) throw ConfigError("k_categories must be positive");
  if (hidden_width < 0) throw ConfigError("hidden_width must be nonnegative");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and nonnegative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be nonnegative");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (binarize_threshold <= 0 || binarize_threshold >= 255) {
    throw ConfigError("binarize_threshold must lie in (0,255)");
  }
  if (mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
}

ElboBreakdown evaluate(DiscreteVae& model, const MatrixX& images, Rng& rng) {
  const auto& shape = model.shape();
  const Eigen::Index n = images.rows();
  if (n == 0) return {};
  double entropy_sum = 0.0;
  double recon_sum = 0.0;
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index rows = std::min(kEvalChunk, n - start);
    const MatrixX chunk = images.middleRows(start, rows);
    const MatrixX probs = model.encode_batch(chunk);
    MatrixX latents(rows, shape.latents * shape.categories);
    for (Eigen::Index b = 0; b < rows; ++b) {
      CategoricalParams params{
          Eigen::Map<const MatrixX>(probs.row(b).data(), shape.latents, shape.categories)};
      entropy_sum += aggregate_entropy(params.probs);
      latents.row(b) = sample_latent(params, rng).flatten().transpose();
    }
    const MatrixX xhat = model.decode_batch(latents);
    for (Eigen::Index b = 0; b < rows; ++b) {
      recon_sum -= aggregate_bce(xhat.row(b), chunk.row(b));
    }
  }
  const double count = static_cast<double>(n);
  const double prior =
      -static_cast<double>(shape.latents) * std::log(static_cast<double>(shape.categories));
  return ElboBreakdown::from_terms(entropy_sum / count, prior, recon_sum / count);
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  std::ostream* log) {
  config.validate();
  if (train_set.pixels() != val_set.pixels()) {
    throw DimensionError("train images have " + std::to_string(train_set.pixels()) +
                         " pixels, validation images " + std::to_string(val_set.pixels()));
  }
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw ConfigError("training and validation sets must be non-empty");
  }

  const ModelShape shape{train_set.pixels(), config.d_latents, config.k_categories,
                         config.hidden_width};
  DiscreteVae model(shape);
  Rng init_rng(config.seed + kInitSeedOffset);
  model.initialize(init_rng);
  Rng train_rng(config.seed + kTrainSeedOffset);

  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    if (!config.record_wall_clock) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  };
  auto measure = [&](int epoch) {
    Rng train_eval(config.seed + kEvalSeedOffset);
    Rng val_eval(config.seed + kEvalSeedOffset);
    MetricsRow row;
    row.epoch = epoch;
    row.train = evaluate(model, train_set.images, train_eval);
    row.val_elbo = evaluate(model, val_set.images, val_eval).total;
    row.seconds = elapsed();
    if (!finite(row.train) || !std::isfinite(row.val_elbo)) {
      throw DivergenceError("non-finite ELBO after epoch " + std::to_string(epoch));
    }
    if (log) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %d  train_elbo %.4f  val_elbo %.4f", epoch,
                    row.train.total, row.val_elbo);
      *log << line << '\n';
    }
    return row;
  };

  TrainResult result{model, {}, 0, 0, {}};
  result.metrics.push_back(measure(0));
  double best_val = result.metrics.back().val_elbo;
  int stale = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto plan = batches(train_set.size(), config.batch_size, train_rng);
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const MatrixX batch = gather_rows(train_set.images, plan[b]);
      model.zero_grads();
      const auto elbos = model.accumulate_gradients(batch, train_rng, config.mc_samples);
      for (const auto& e : elbos) {
        if (!finite(e)) {
          throw DivergenceError("non-finite ELBO in epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(b));
        }
      }
      model.encoder().scale_grads(1.0 / static_cast<double>(batch.rows()));
      model.decoder().scale_grads(1.0 / static_cast<double>(batch.rows()));
      if (config.learning_rate > 0.0) {
        // Both gradients come from the same pass; encoder is updated first.
        model.encoder().sga_step(config.learning_rate);
        model.decoder().sga_step(config.learning_rate);
      }
    }
    result.metrics.push_back(measure(epoch));
    result.epochs_run = epoch;
    const double val = result.metrics.back().val_elbo;
    if (val > best_val) {
      best_val = val;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  model.zero_grads();
  result.model.zero_grads();
  result.rng_state = train_rng.state();
  return result;
}

std::string format_metrics_row(const MetricsRow& row) {
  char line[256];
  std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", row.epoch, row.train.total,
                row.train.entropy_term, row.train.prior_term, row.train.recon_term, row.val_elbo,
                row.seconds);
  return line;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& row : rows) out << format_metrics_row(row) << '\n';
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write metrics file " + path);
  write_metrics_csv(out, rows);
}

}  // namespace dvae
