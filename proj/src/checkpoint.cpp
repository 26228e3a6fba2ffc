#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "dvae/errors.hpp"
#include "dvae/trainer.hpp"

namespace dvae {
namespace {

struct TensorEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::vector<char>& buf, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= std::uint32_t{static_cast<unsigned char>(buf[at + static_cast<std::size_t>(i)])} << (8 * i);
  }
  return v;
}

void put_f64(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const std::vector<char>& buf, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= std::uint64_t{static_cast<unsigned char>(buf[at + static_cast<std::size_t>(i)])}
            << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

// Visits every parameter tensor of the model in manifest order.
template <typename Model, typename Fn>
void for_each_tensor(Model& model, Fn&& fn) {
  auto visit = [&](auto& net, const std::string& prefix) {
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      auto& layer = net.layers()[i];
      const std::string base = prefix + "." + std::to_string(i);
      fn(base + ".weight", layer.weights.rows(), layer.weights.cols(), layer.weights.data());
      fn(base + ".bias", layer.bias.rows(), Eigen::Index{1}, layer.bias.data());
    }
  };
  visit(model.encoder(), "encoder");
  visit(model.decoder(), "decoder");
}

std::string build_header(const Checkpoint& c) {
  std::ostringstream h;
  h.precision(17);
  h << "pixels=" << c.shape.pixels << '\n'
    << "latents=" << c.shape.latents << '\n'
    << "categories=" << c.shape.categories << '\n'
    << "hidden=" << c.shape.hidden << '\n'
    << "image_rows=" << c.image_rows << '\n'
    << "image_cols=" << c.image_cols << '\n'
    << "learning_rate=" << c.config.learning_rate << '\n'
    << "batch_size=" << c.config.batch_size << '\n'
    << "max_epochs=" << c.config.max_epochs << '\n'
    << "patience=" << c.config.patience << '\n'
    << "seed=" << c.config.seed << '\n'
    << "threshold=" << c.config.binarize_threshold << '\n'
    << "mc_samples=" << c.config.mc_samples << '\n'
    << "epoch=" << c.epoch << '\n'
    << "rng=" << c.rng_state[0] << ' ' << c.rng_state[1] << ' ' << c.rng_state[2] << ' '
    << c.rng_state[3] << '\n';
  for_each_tensor(c.model, [&](const std::string& name, Eigen::Index rows, Eigen::Index cols,
                               const double*) {
    h << "tensor=" << name << ' ' << rows << ' ' << cols << '\n';
  });
  return h.str();
}

long long to_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw CorruptionError("checkpoint header: bad integer for " + key + ": '" + value + "'");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string header = build_header(checkpoint);
  std::string out(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for_each_tensor(checkpoint.model, [&](const std::string&, Eigen::Index rows, Eigen::Index cols,
                                        const double* data) {
    for (Eigen::Index i = 0; i < rows * cols; ++i) put_f64(out, data[i]);
  });
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open checkpoint " + path);
  const std::vector<char> buf{std::istreambuf_iterator<char>(file),
                              std::istreambuf_iterator<char>()};
  if (buf.size() < 8 || std::memcmp(buf.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError(path + ": not a checkpoint (bad magic)");
  }
  if (buf.size() < 16) throw CorruptionError(path + ": truncated before header length");
  const std::uint32_t version = get_u32(buf, 8);
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": checkpoint version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const std::size_t header_len = get_u32(buf, 12);
  if (buf.size() < 16 + header_len) throw CorruptionError(path + ": truncated header");

  Checkpoint c;
  std::vector<TensorEntry> manifest;
  std::istringstream header(std::string(buf.data() + 16, header_len));
  std::string line;
  while (std::getline(header, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CorruptionError(path + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tensor") {
      std::istringstream fields(value);
      TensorEntry e;
      if (!(fields >> e.name >> e.rows >> e.cols)) {
        throw CorruptionError(path + ": malformed tensor entry '" + value + "'");
      }
      manifest.push_back(e);
    } else if (key == "rng") {
      std::istringstream fields(value);
      for (auto& word : c.rng_state) {
        if (!(fields >> word)) throw CorruptionError(path + ": malformed rng state");
      }
    } else if (key == "seed") {
      try {
        c.config.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw CorruptionError(path + ": bad seed '" + value + "'");
      }
    } else if (key == "learning_rate") {
      try {
        c.config.learning_rate = std::stod(value);
      } catch (const std::exception&) {
        throw CorruptionError(path + ": bad learning_rate '" + value + "'");
      }
    } else {
      const long long v = to_integer(key, value);
      if (key == "pixels") c.shape.pixels = v;
      else if (key == "latents") c.shape.latents = v;
      else if (key == "categories") c.shape.categories = v;
      else if (key == "hidden") c.shape.hidden = v;
      else if (key == "image_rows") c.image_rows = v;
      else if (key == "image_cols") c.image_cols = v;
      else if (key == "batch_size") c.config.batch_size = v;
      else if (key == "max_epochs") c.config.max_epochs = static_cast<int>(v);
      else if (key == "patience") c.config.patience = static_cast<int>(v);
      else if (key == "threshold") c.config.binarize_threshold = static_cast<int>(v);
      else if (key == "mc_samples") c.config.mc_samples = static_cast<int>(v);
      else if (key == "epoch") c.epoch = static_cast<int>(v);
      // Unknown keys are ignored so later versions can add fields.
    }
  }
  c.config.d_latents = c.shape.latents;
  c.config.k_categories = c.shape.categories;
  c.config.hidden_width = c.shape.hidden;

  try {
    c.model = DiscreteVae(c.shape);
  } catch (const ConfigError& e) {
    throw CorruptionError(path + ": header describes an invalid model: " + e.what());
  }

  std::size_t declared = 0;
  for (const auto& e : manifest) declared += static_cast<std::size_t>(e.rows * e.cols);
  const std::size_t payload = buf.size() - 16 - header_len;
  if (payload != declared * 8) {
    throw CorruptionError(path + ": payload has " + std::to_string(payload) +
                          " bytes, manifest declares " + std::to_string(declared * 8));
  }

  std::size_t at = 16 + header_len;
  std::size_t index = 0;
  for_each_tensor(c.model, [&](const std::string& name, Eigen::Index rows, Eigen::Index cols,
                               double* data) {
    if (index >= manifest.size() || manifest[index].name != name ||
        manifest[index].rows != rows || manifest[index].cols != cols) {
      throw CorruptionError(path + ": manifest does not match model tensor " + name);
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i, at += 8) data[i] = get_f64(buf, at);
    ++index;
  });
  if (index != manifest.size()) throw CorruptionError(path + ": manifest lists extra tensors");
  return c;
}

}  // namespace dvae
