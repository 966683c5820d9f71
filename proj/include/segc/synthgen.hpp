#pragma once

#include "segc/metrics.hpp"
#include "segc/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace segc {

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
  bool operator==(const Rgb&) const = default;
};

struct TextureSpec {
  Rgb base;
  double speckle = 0.05;         // per-pixel uniform luminance jitter amplitude
  double wave_amplitude = 0.05;  // low-frequency sinusoidal shading amplitude
  double wave_period = 24.0;     // pixels
  bool operator==(const TextureSpec&) const = default;
};

/// Distribution shift applied after rendering.
struct ShiftSpec {
  double hue_shift = 0.0;  // turns around the grey axis
  double contrast_scale = 1.0;
  double noise_variance = 0.0;
  double eccentricity_scale = 1.0;
  double vignette = 0.0;  // 1 - vignette * r^2 darkening, r normalised to the corner
  bool operator==(const ShiftSpec&) const = default;
};

struct EnvironmentSpec {
  std::string name = "in_distribution";
  int image_size = 64;
  int n_images = 100;
  int blobs_min = 1;
  int blobs_max = 3;
  double radius_min = 5.0;
  double radius_max = 12.0;
  TextureSpec foreground{{0.85, 0.75, 0.55}, 0.06, 0.03, 20.0};
  TextureSpec background{{0.35, 0.25, 0.30}, 0.03, 0.06, 28.0};
  ShiftSpec shift;

  void validate() const;
  bool operator==(const EnvironmentSpec&) const = default;
};

struct SampleRecord {
  Tensor image;  // [3,H,W] in [0,1], quantised to 8 bits
  BinaryMask mask;
  std::string environment;
  int index = 0;
  std::uint64_t seed = 0;
};

/// Renders spec.n_images samples. Image i depends only on (seed, spec, i).
std::vector<SampleRecord> generate(const EnvironmentSpec& spec, std::uint64_t seed);

struct EnvironmentData {
  std::string name;
  std::vector<SampleRecord> samples;
};

struct SuiteConfig {
  EnvironmentSpec in_distribution;
  std::vector<EnvironmentSpec> ood;

  /// In-distribution spec plus three shifted environments:
  /// A global hue + contrast, B heavy noise + vignette, C blob shape + texture.
  static SuiteConfig defaults();
  void validate() const;
};

struct Suite {
  EnvironmentData train;
  EnvironmentData val;
  EnvironmentData test_id;
  std::vector<EnvironmentData> ood;
};

struct SplitSizes {
  std::size_t train, val, test;
};

/// 80/10/10 split of n images.
SplitSizes split_sizes(std::size_t n);

Suite standard_suite(std::uint64_t seed, const SuiteConfig& config = SuiteConfig::defaults());

}  // namespace segc
