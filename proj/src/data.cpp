#include "dvae/data.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "dvae/errors.hpp"

namespace dvae {
namespace {

std::string hex32(std::uint32_t v) {
  std::ostringstream out;
  out << "0x" << std::hex;
  out.width(8);
  out.fill('0');
  out << v;
  return out.str();
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t at) {
  return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) |
         (std::uint32_t{buf[at + 2]} << 8) | std::uint32_t{buf[at + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxArray load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open IDX file " + path);
  const std::vector<std::uint8_t> buf{std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>()};
  if (buf.size() < 4) {
    throw LengthError(path + ": " + std::to_string(buf.size()) +
                      " bytes, too short for an IDX header");
  }
  IdxArray out;
  out.magic = read_be32(buf, 0);
  std::size_t rank = 0;
  if (out.magic == kIdxImageMagic) {
    rank = 3;
  } else if (out.magic == kIdxLabelMagic) {
    rank = 1;
  } else {
    throw FormatError(path + ": unrecognized IDX magic " + hex32(out.magic));
  }
  const std::size_t header = 4 + 4 * rank;
  if (buf.size() < header) {
    throw LengthError(path + ": header declares " + std::to_string(rank) +
                      " dimensions but the file ends after " + std::to_string(buf.size()) +
                      " bytes");
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    out.dims.push_back(read_be32(buf, 4 + 4 * i));
    count *= out.dims.back();
  }
  if (buf.size() - header < count) {
    throw LengthError(path + ": payload has " + std::to_string(buf.size() - header) +
                      " bytes, header declares " + std::to_string(count));
  }
  out.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(header),
                   buf.begin() + static_cast<std::ptrdiff_t>(header + count));
  return out;
}

IdxArray load_idx_images(const std::string& path) {
  IdxArray a = load_idx(path);
  if (a.magic != kIdxImageMagic) {
    throw FormatError(path + ": expected image magic " + hex32(kIdxImageMagic) + ", found " +
                      hex32(a.magic));
  }
  return a;
}

IdxArray load_idx_labels(const std::string& path) {
  IdxArray a = load_idx(path);
  if (a.magic != kIdxLabelMagic) {
    throw FormatError(path + ": expected label magic " + hex32(kIdxLabelMagic) + ", found " +
                      hex32(a.magic));
  }
  return a;
}

void write_idx(const std::string& path, const IdxArray& array) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write IDX file " + path);
  write_be32(out, array.magic);
  for (auto d : array.dims) write_be32(out, d);
  out.write(reinterpret_cast<const char*>(array.bytes.data()),
            static_cast<std::streamsize>(array.bytes.size()));
}

Dataset binarize(const IdxArray& raw, int threshold) {
  if (threshold <= 0 || threshold >= 255) {
    throw ConfigError("binarize: threshold must lie in (0,255), got " + std::to_string(threshold));
  }
  if (raw.magic != kIdxImageMagic || raw.dims.size() != 3) {
    throw FormatError("binarize: expected a 3-dimensional image array");
  }
  Dataset ds;
  ds.rows = raw.dims[1];
  ds.cols = raw.dims[2];
  const Eigen::Index n = raw.dims[0];
  ds.images.resize(n, ds.rows * ds.cols);
  for (Eigen::Index i = 0; i < ds.images.size(); ++i) {
    ds.images.data()[i] = raw.bytes[static_cast<std::size_t>(i)] >= threshold ? 1.0 : 0.0;
  }
  return ds;
}

void attach_labels(Dataset& dataset, const IdxArray& labels) {
  if (labels.dims.size() != 1 || static_cast<Eigen::Index>(labels.dims[0]) != dataset.size()) {
    throw DimensionError("label count does not match image count " +
                         std::to_string(dataset.size()));
  }
  dataset.labels = std::vector<int>(labels.bytes.begin(), labels.bytes.end());
}

std::vector<std::vector<Eigen::Index>> batches(Eigen::Index n, Eigen::Index batch_size,
                                               Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (batch_size > n) {
    throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                      std::to_string(n));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<Eigen::Index>> out;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

Dataset synthetic_bars(Eigen::Index n, Eigen::Index side, Rng& rng) {
  if (side < 2) throw ConfigError("synthetic_bars: side must be at least 2");
  Dataset ds;
  ds.rows = side;
  ds.cols = side;
  ds.images = MatrixX::Zero(n, side * side);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto label = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(2 * side)));
    labels[static_cast<std::size_t>(i)] = static_cast<int>(label);
    for (Eigen::Index t = 0; t < side; ++t) {
      const Eigen::Index pixel = label < side ? label * side + t : t * side + (label - side);
      ds.images(i, pixel) = 1.0;
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

MatrixX gather_rows(const MatrixX& images, const std::vector<Eigen::Index>& indices) {
  MatrixX out(static_cast<Eigen::Index>(indices.size()), images.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = images.row(indices[i]);
  }
  return out;
}

}  // namespace dvae
