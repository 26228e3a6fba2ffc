#ifndef DVAE_TRAINER_HPP
#define DVAE_TRAINER_HPP

// Stochastic gradient ascent on the ELBO with patience-based early stopping on
// the validation ELBO.
//
// Every random stream is derived from TrainConfig::seed:
//   seed + kInitSeedOffset      weight initialization
//   seed + kTrainSeedOffset     batch shuffling and latent sampling while training
//   seed + kEvalSeedOffset      fresh stream for every evaluation pass

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dvae/data.hpp"
#include "dvae/dvae.hpp"
#include "dvae/rng.hpp"

namespace dvae {

inline constexpr std::uint64_t kInitSeedOffset = 0;
inline constexpr std::uint64_t kTrainSeedOffset = 1;
inline constexpr std::uint64_t kEvalSeedOffset = 2;

struct TrainConfig {
  Eigen::Index d_latents = 20;
  Eigen::Index k_categories = 10;
  Eigen::Index hidden_width = 512;
  double learning_rate = 1e-3;  // 0 freezes the parameters
  Eigen::Index batch_size = 100;
  int max_epochs = 50;
  int patience = 5;
  std::uint64_t seed = 42;
  int binarize_threshold = kDefaultThreshold;
  int mc_samples = 1;
  bool record_wall_clock = false;  // false writes 0 seconds so metrics are reproducible

  /// ConfigError on any out-of-range field.
  void validate() const;
};

struct MetricsRow {
  int epoch = 0;
  ElboBreakdown train;
  double val_elbo = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  DiscreteVae model;  // parameters from the best validation epoch
  std::vector<MetricsRow> metrics;
  int best_epoch = 0;
  int epochs_run = 0;
  Rng::State rng_state{};  // training stream after the last epoch
};

/// Mean single-sample ELBO estimate over the rows of `images`, in row order.
ElboBreakdown evaluate(DiscreteVae& model, const MatrixX& images, Rng& rng);

/// Row 0 holds the metrics of the initialized model; row e those after epoch e.
/// Progress lines go to `log` when it is non-null.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  std::ostream* log = nullptr);

inline constexpr const char* kMetricsHeader =
    "epoch,train_elbo,train_entropy,train_prior,train_recon,val_elbo,seconds";

std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

// Checkpoint file:
//   8 bytes   "DVAECKPT"
//   u32 LE    format version
//   u32 LE    header length in bytes
//   header    UTF-8 key=value lines: config echo, image size, epoch, rng
//             state, then one "tensor=<name> <rows> <cols>" line per tensor
//   payload   each tensor as little-endian f64, row-major, in manifest order

inline constexpr char kCheckpointMagic[9] = "DVAECKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  ModelShape shape;
  Eigen::Index image_rows = 0;
  Eigen::Index image_cols = 0;
  int epoch = 0;
  Rng::State rng_state{};
  DiscreteVae model{ModelShape{1, 1, 1, 0}};
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);

/// FormatError on bad magic or version, CorruptionError when the manifest and
/// payload disagree or the file is truncated.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dvae

#endif  // DVAE_TRAINER_HPP
