#pragma once

// Hand-rolled generators for the property tests.

#include "segc/metrics.hpp"
#include "segc/random.hpp"
#include "segc/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace segc::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = 0.0, double hi = 1.0) {
  Array a(static_cast<Eigen::Index>(shape_size(shape)));
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform(rng, lo, hi);
  return Tensor(std::move(shape), std::move(a));
}

inline BinaryMask random_mask(Rng& rng, Eigen::Index h, Eigen::Index w, double p = 0.5) {
  BinaryMask m(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) m.set(y, x, uniform01(rng) < p);
  return m;
}

/// Mask tensor [1,H,W] with 0/1 values.
inline Tensor random_binary_tensor(Rng& rng, std::size_t h, std::size_t w, double p = 0.5) {
  return random_mask(rng, static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w), p).to_tensor();
}

/// Values in [lo, hi] that stay at least `margin` away from every listed kink.
inline Tensor tensor_away_from(Rng& rng, Shape shape, double lo, double hi, std::initializer_list<double> kinks,
                               double margin) {
  Array a(static_cast<Eigen::Index>(shape_size(shape)));
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double v;
    bool ok;
    do {
      v = uniform(rng, lo, hi);
      ok = true;
      for (double k : kinks) ok = ok && std::abs(v - k) > margin;
    } while (!ok);
    a(i) = v;
  }
  return Tensor(std::move(shape), std::move(a));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("segc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace segc::testing
