#pragma once

#include "segc/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace segc {

struct Parameter {
  std::string name;
  Tensor value;
};

/// conv(3->8) -> conv(8->16, stride 2) -> conv(16->16) -> upsample x2 ->
/// conv(16->8) -> conv(8->1, k1) -> sigmoid, leaky ReLU (0.1) between convs.
class TinySegNet {
 public:
  static constexpr double kLeakySlope = 0.1;

  /// Kaiming-uniform kernels (bound sqrt(6 / fan_in)), zero biases.
  static TinySegNet init(std::uint64_t seed);

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Tensor> values() const;
  /// Replaces parameter values; shapes must match.
  void set_values(std::span<const Tensor> values);
  std::size_t parameter_count() const;
  std::uint64_t seed() const { return seed_; }

  bool operator==(const TinySegNet& other) const;

 private:
  std::vector<Parameter> params_;
  std::uint64_t seed_ = 0;
};

/// Probability map [1,H,W] for an image [3,H,W] with even H and W.
Tensor forward(const TinySegNet& model, const Tensor& image);
/// Same network evaluated with explicit parameter tensors (e.g. graph leaves).
Tensor forward(std::span<const Tensor> params, const Tensor& image);

struct Checkpoint {
  TinySegNet model;
  std::string regime;
};

/// "SEGCKPT1", u64 LE header length, JSON header (shapes, seed, regime),
/// then every parameter as little-endian float64 in declaration order.
void save_checkpoint(const std::filesystem::path& path, const TinySegNet& model, const std::string& regime);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segc
