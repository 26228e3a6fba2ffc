// dvae: train, evaluate, reconstruct, sample and verify discrete VAEs.
//
// Exit codes: 0 success, 1 runtime or verification failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dvae/data.hpp"
#include "dvae/distributions.hpp"
#include "dvae/dvae.hpp"
#include "dvae/errors.hpp"
#include "dvae/trainer.hpp"
#include "dvae/verify.hpp"

namespace fs = std::filesystem;
using namespace dvae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

void write_pgm(const fs::path& path, Eigen::Index rows, Eigen::Index cols, const VectorX& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    // Round half away from zero, so a mean of exactly 0.5 becomes 128.
    const long level = std::lround(255.0 * values(i));
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0L, 255L))));
  }
}

// Picture size for a model: stored size if present, else a square, else a
// single row.
std::pair<Eigen::Index, Eigen::Index> picture_size(const Checkpoint& c) {
  if (c.image_rows * c.image_cols == c.shape.pixels && c.image_rows > 0) {
    return {c.image_rows, c.image_cols};
  }
  const auto side = static_cast<Eigen::Index>(std::lround(std::sqrt(double(c.shape.pixels))));
  if (side * side == c.shape.pixels) return {side, side};
  return {1, c.shape.pixels};
}

Dataset load_images(const std::string& path, int threshold) {
  return binarize(load_idx_images(path), threshold);
}

struct TrainArgs {
  std::string train_images, train_labels, val_images, out_dir;
  TrainConfig config;
};

int cmd_train(const TrainArgs& args) {
  Dataset train_set = load_images(args.train_images, args.config.binarize_threshold);
  if (!args.train_labels.empty()) attach_labels(train_set, load_idx_labels(args.train_labels));
  const Dataset val_set = load_images(args.val_images, args.config.binarize_threshold);

  fs::create_directories(args.out_dir);
  TrainResult result = train(args.config, train_set, val_set, &std::cerr);
  write_metrics_csv((fs::path(args.out_dir) / "metrics.csv").string(), result.metrics);

  Checkpoint c;
  c.config = args.config;
  c.shape = result.model.shape();
  c.image_rows = train_set.rows;
  c.image_cols = train_set.cols;
  c.epoch = result.best_epoch;
  c.rng_state = result.rng_state;
  c.model = result.model;
  save_checkpoint(c, (fs::path(args.out_dir) / "model.ckpt").string());

  std::printf("final validation ELBO %.6f (best epoch %d of %d)\n",
              result.metrics[static_cast<std::size_t>(result.best_epoch)].val_elbo,
              result.best_epoch, result.epochs_run);
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& images, std::uint64_t seed,
             int threshold) {
  Checkpoint c = load_checkpoint(model_path);
  const Dataset data = load_images(images, threshold);
  if (data.pixels() != c.shape.pixels) {
    throw DimensionError("model expects " + std::to_string(c.shape.pixels) + " pixels, images have " +
                         std::to_string(data.pixels()));
  }
  Rng rng(seed);
  const ElboBreakdown e = evaluate(c.model, data.images, rng);
  std::printf("elbo %.6f\nentropy %.6f\nprior %.6f\nrecon %.6f\n", e.total, e.entropy_term,
              e.prior_term, e.recon_term);
  return kExitOk;
}

int cmd_reconstruct(const std::string& model_path, const std::string& images, int n,
                    std::uint64_t seed, const std::string& out_dir, int threshold) {
  Checkpoint c = load_checkpoint(model_path);
  const Dataset data = load_images(images, threshold);
  if (data.pixels() != c.shape.pixels) {
    throw DimensionError("model expects " + std::to_string(c.shape.pixels) + " pixels, images have " +
                         std::to_string(data.pixels()));
  }
  if (n > data.size()) throw UsageError("--n exceeds the number of images");
  fs::create_directories(out_dir);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const VectorX x = data.images.row(i).transpose();
    const CategoricalParams params = c.model.encode(x);
    const VectorX xhat = c.model.decode(sample_latent(params, rng));
    char name[64];
    std::snprintf(name, sizeof name, "input_%04d.pgm", i);
    write_pgm(fs::path(out_dir) / name, data.rows, data.cols, x);
    std::snprintf(name, sizeof name, "recon_%04d.pgm", i);
    write_pgm(fs::path(out_dir) / name, data.rows, data.cols, xhat);
  }
  return kExitOk;
}

int cmd_sample(const std::string& model_path, int n, std::uint64_t seed,
               const std::string& out_dir, bool dump_indices) {
  Checkpoint c = load_checkpoint(model_path);
  const auto [rows, cols] = picture_size(c);
  fs::create_directories(out_dir);
  Rng rng(seed);
  const CategoricalParams prior{
      MatrixX::Constant(c.shape.latents, c.shape.categories, 1.0 / double(c.shape.categories))};
  for (int i = 0; i < n; ++i) {
    const LatentSample z = sample_latent(prior, rng);
    if (dump_indices) {
      std::printf("sample %d:", i);
      for (int k : z.indices) std::printf(" %d", k);
      std::printf("\n");
    }
    char name[64];
    std::snprintf(name, sizeof name, "sample_%04d.pgm", i);
    write_pgm(fs::path(out_dir) / name, rows, cols, c.model.decode(z));
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  const auto results = run_suite(suite, seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s %-9s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete variational autoencoder with score-function gradients"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train on IDX images and write metrics + checkpoint");
  train_cmd->add_option("--train-images", train_args.train_images, "training IDX images")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--train-labels", train_args.train_labels, "training IDX labels")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--val-images", train_args.val_images, "validation IDX images")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--d", train_args.config.d_latents, "latent variables D")->capture_default_str();
  train_cmd->add_option("--k", train_args.config.k_categories, "categories per latent K")->capture_default_str();
  train_cmd->add_option("--hidden", train_args.config.hidden_width, "hidden width (0: none)")->capture_default_str();
  train_cmd->add_option("--lr", train_args.config.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--batch", train_args.config.batch_size, "batch size")->capture_default_str();
  train_cmd->add_option("--epochs", train_args.config.max_epochs, "maximum epochs")->capture_default_str();
  train_cmd->add_option("--patience", train_args.config.patience, "early-stopping patience")->capture_default_str();
  train_cmd->add_option("--seed", train_args.config.seed, "random seed")->capture_default_str();
  train_cmd->add_option("--threshold", train_args.config.binarize_threshold, "binarization threshold")->capture_default_str();
  train_cmd->add_option("--mc-samples", train_args.config.mc_samples, "latent samples per example")->capture_default_str();
  train_cmd->add_flag("--timing", train_args.config.record_wall_clock, "record wall-clock seconds in metrics.csv");
  train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();

  std::string model_path, images, out_dir, suite = "all";
  std::uint64_t seed = 42;
  int n = 0;
  int threshold = kDefaultThreshold;
  bool dump_indices = false;

  auto* eval_cmd = app.add_subcommand("eval", "print the mean ELBO breakdown of a dataset");
  eval_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--images", images)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", seed)->capture_default_str();
  eval_cmd->add_option("--threshold", threshold)->capture_default_str();

  auto* recon_cmd = app.add_subcommand("reconstruct", "write input/reconstruction PGM pairs");
  recon_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("--images", images)->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("--n", n)->required()->check(CLI::NonNegativeNumber);
  recon_cmd->add_option("--seed", seed)->capture_default_str();
  recon_cmd->add_option("--threshold", threshold)->capture_default_str();
  recon_cmd->add_option("--out", out_dir)->required();

  auto* sample_cmd = app.add_subcommand("sample", "decode latents drawn from the uniform prior");
  sample_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--n", n)->required()->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--seed", seed)->capture_default_str();
  sample_cmd->add_option("--out", out_dir)->required();
  sample_cmd->add_flag("--dump-indices", dump_indices, "print the sampled category indices");

  auto* verify_cmd = app.add_subcommand("verify", "run the exact-oracle verification suites");
  verify_cmd->add_option("--suite", suite, "all|grads|unbiased|bound|kl|elbo")
      ->check(CLI::IsMember({"all", "grads", "unbiased", "bound", "kl", "elbo"}))
      ->capture_default_str();
  verify_cmd->add_option("--seed", seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      train_args.config.validate();
      return cmd_train(train_args);
    }
    if (*eval_cmd) return cmd_eval(model_path, images, seed, threshold);
    if (*recon_cmd) return cmd_reconstruct(model_path, images, n, seed, out_dir, threshold);
    if (*sample_cmd) return cmd_sample(model_path, n, seed, out_dir, dump_indices);
    if (*verify_cmd) return cmd_verify(suite, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
