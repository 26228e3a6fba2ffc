#ifndef DVAE_DATA_HPP
#define DVAE_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dvae/rng.hpp"
#include "dvae/tensor.hpp"

namespace dvae {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Raw contents of an (uncompressed) IDX file of unsigned bytes.
struct IdxArray {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;  // row-major
};

/// Parses an unsigned-byte IDX file; accepts image (3 dims) or label (1 dim)
/// magic. FormatError on any other magic, LengthError on a short file.
IdxArray load_idx(const std::string& path);

/// Like load_idx but requires the image magic.
IdxArray load_idx_images(const std::string& path);

/// Like load_idx but requires the label magic.
IdxArray load_idx_labels(const std::string& path);

void write_idx(const std::string& path, const IdxArray& array);

struct Dataset {
  MatrixX images;  // N x P, entries in {0,1}
  std::optional<std::vector<int>> labels;
  Eigen::Index rows = 0;  // image height, for writing pictures
  Eigen::Index cols = 0;

  Eigen::Index size() const { return images.rows(); }
  Eigen::Index pixels() const { return images.cols(); }
};

inline constexpr int kDefaultThreshold = 128;

/// pixel = 1 if byte >= threshold else 0. `raw` must hold images (3 dims).
Dataset binarize(const IdxArray& raw, int threshold = kDefaultThreshold);

/// Attaches labels, checking the count against the images.
void attach_labels(Dataset& dataset, const IdxArray& labels);

/// Shuffles [0, n) with Fisher-Yates and cuts consecutive chunks of
/// `batch_size`; the final chunk may be short.
std::vector<std::vector<Eigen::Index>> batches(Eigen::Index n, Eigen::Index batch_size, Rng& rng);

/// `n` side x side images, each a single full row (labels 0..side-1) or a
/// single full column (labels side..2*side-1) of ones.
Dataset synthetic_bars(Eigen::Index n, Eigen::Index side, Rng& rng);

/// Rows `indices` of `images`, in that order.
MatrixX gather_rows(const MatrixX& images, const std::vector<Eigen::Index>& indices);

}  // namespace dvae

#endif  // DVAE_DATA_HPP
