#include "segc/segmodel.hpp"

#include "segc/random.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace segc {

namespace {

struct ConvLayer {
  const char* name;
  std::size_t out, in, k;
  int stride, pad;
};

constexpr ConvLayer kLayers[] = {
    {"enc1", 8, 3, 3, 1, 1}, {"enc2", 16, 8, 3, 2, 1}, {"mid", 16, 16, 3, 1, 1},
    {"dec1", 8, 16, 3, 1, 1}, {"head", 1, 8, 1, 1, 0},
};
constexpr std::size_t kNumLayers = std::size(kLayers);

}  // namespace

TinySegNet TinySegNet::init(std::uint64_t seed) {
  TinySegNet m;
  m.seed_ = seed;
  Rng rng(derive_seed(seed, hash_name("tinysegnet.init")));
  for (const ConvLayer& l : kLayers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in * l.k * l.k));
    Array w(static_cast<Eigen::Index>(l.out * l.in * l.k * l.k));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform(rng, -bound, bound);
    m.params_.push_back({std::string(l.name) + ".weight", Tensor({l.out, l.in, l.k, l.k}, std::move(w))});
    m.params_.push_back({std::string(l.name) + ".bias", Tensor::zeros({l.out})});
  }
  return m;
}

std::vector<Tensor> TinySegNet::values() const {
  std::vector<Tensor> v;
  v.reserve(params_.size());
  for (const auto& p : params_) v.push_back(p.value);
  return v;
}

void TinySegNet::set_values(std::span<const Tensor> values) {
  if (values.size() != params_.size()) throw std::invalid_argument("TinySegNet: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i].value.shape()) {
      throw std::invalid_argument("TinySegNet: shape mismatch for " + params_[i].name);
    }
    params_[i].value = values[i].detach();
  }
}

std::size_t TinySegNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool TinySegNet::operator==(const TinySegNet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i].value;
    const auto& b = other.params_[i].value;
    if (a.shape() != b.shape() || !(a.data() == b.data()).all()) return false;
  }
  return true;
}

Tensor forward(std::span<const Tensor> params, const Tensor& image) {
  if (params.size() != 2 * kNumLayers) throw std::invalid_argument("forward: expected 10 parameter tensors");
  if (image.rank() != 3 || image.dim(0) != 3) throw std::invalid_argument("forward: expected [3,H,W] image");
  if (image.dim(1) % 2 != 0 || image.dim(2) % 2 != 0) throw std::invalid_argument("forward: H and W must be even");

  const auto conv = [&](const Tensor& x, std::size_t layer) {
    const ConvLayer& l = kLayers[layer];
    return add_channel_bias(conv2d(x, params[2 * layer], l.stride, l.pad), params[2 * layer + 1]);
  };
  const double slope = TinySegNet::kLeakySlope;
  Tensor h = leaky_relu(conv(image, 0), slope);
  h = leaky_relu(conv(h, 1), slope);
  h = leaky_relu(conv(h, 2), slope);
  h = upsample_nearest2x(h);
  h = leaky_relu(conv(h, 3), slope);
  return sigmoid(conv(h, 4));
}

Tensor forward(const TinySegNet& model, const Tensor& image) {
  const std::vector<Tensor> v = model.values();
  return forward(v, image);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'S', 'E', 'G', 'C', 'K', 'P', 'T', '1'};

void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TinySegNet& model, const std::string& regime) {
  nlohmann::json header;
  header["format"] = "segc-checkpoint";
  header["version"] = 1;
  header["seed"] = model.seed();
  header["regime"] = regime;
  header["dtype"] = "float64-le";
  for (const auto& p : model.parameters()) header["parameters"].push_back({{"name", p.name}, {"shape", p.value.shape()}});
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  write_u64_le(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.parameters()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) write_u64_le(os, std::bit_cast<std::uint64_t>(p.value[i]));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("checkpoint: bad magic");
  const std::uint64_t len = read_u64_le(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ck{TinySegNet::init(header.at("seed").get<std::uint64_t>()), header.at("regime").get<std::string>()};
  const auto& entries = header.at("parameters");
  if (entries.size() != ck.model.parameters().size()) throw std::runtime_error("checkpoint: parameter list mismatch");
  std::vector<Tensor> values;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto shape = entries[k].at("shape").get<Shape>();
    if (shape != ck.model.parameters()[k].value.shape() || entries[k].at("name") != ck.model.parameters()[k].name) {
      throw std::runtime_error("checkpoint: parameter layout mismatch at " + std::to_string(k));
    }
    Array data(static_cast<Eigen::Index>(shape_size(shape)));
    for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = std::bit_cast<double>(read_u64_le(is));
    values.emplace_back(shape, std::move(data));
  }
  ck.model.set_values(values);
  return ck;
}

}  // namespace segc
