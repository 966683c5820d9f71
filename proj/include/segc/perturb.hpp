#pragma once

#include "segc/metrics.hpp"
#include "segc/tensor.hpp"

#include <cstdint>

namespace segc {

/// Enabled transforms and their parameter ranges. Defaults follow the
/// augmentation table: flips, RandomRotate90, GaussNoise(max var 0.01),
/// ImageCompression(10..100), OpticalDistortion(limit 10), ColorJitter(0.2 each).
struct PerturbationSpec {
  bool flip = true;
  bool rotate90 = true;

  bool gaussian_noise = true;
  double noise_variance_max = 0.01;

  bool compression = true;
  int quality_min = 10;
  int quality_max = 100;

  bool optical_distortion = true;
  double distortion_limit = 10.0;

  bool color_jitter = true;
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.2;

  double apply_probability = 0.5;

  void validate() const;

  /// Every transform disabled.
  static PerturbationSpec none();

  bool operator==(const PerturbationSpec&) const = default;
};

/// Radial coefficient bound corresponding to a distortion limit.
double distortion_coefficient_bound(double distortion_limit);

/// Parts of a sampled perturbation that move pixels; also applied to masks.
struct GeometricPerturbation {
  bool flip_horizontal = false;
  bool flip_vertical = false;
  int rot90 = 0;            // counter-clockwise quarter turns
  double distortion = 0.0;  // radial coefficient

  bool is_identity() const { return !flip_horizontal && !flip_vertical && rot90 == 0 && distortion == 0.0; }
  bool operator==(const GeometricPerturbation&) const = default;
};

/// Parts that only change intensities; never applied to masks.
struct PhotometricPerturbation {
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
  int quality = 100;
  double noise_variance = 0.0;
  std::uint64_t noise_seed = 0;

  bool is_identity() const {
    return brightness == 0.0 && contrast == 0.0 && saturation == 0.0 && hue == 0.0 && quality >= 100 &&
           noise_variance == 0.0;
  }
  bool operator==(const PhotometricPerturbation&) const = default;
};

struct AppliedPerturbation {
  GeometricPerturbation geometric;
  PhotometricPerturbation photometric;

  static AppliedPerturbation identity() { return {}; }
  bool is_identity() const { return geometric.is_identity() && photometric.is_identity(); }
  bool operator==(const AppliedPerturbation&) const = default;
};

/// Deterministic in seed. Returns the identity with probability 1 - apply_probability.
AppliedPerturbation sample(const PerturbationSpec& spec, std::uint64_t seed);

/// Geometric then photometric transforms on a [3,H,W] image in [0,1]; result clamped to [0,1].
Tensor apply_to_image(const AppliedPerturbation& p, const Tensor& image);

/// Geometric transforms only, nearest-neighbour resampling.
BinaryMask apply_to_mask(const AppliedPerturbation& p, const BinaryMask& mask);

enum class Interpolation { nearest, bilinear };

/// Geometric transforms on any [C,H,W] map (e.g. a soft prediction). Result is a constant.
Tensor apply_geometric(const GeometricPerturbation& g, const Tensor& map, Interpolation interp);

/// Blocky quality-loss surrogate used for the compression transform.
void compress_surrogate(Array& planes, Eigen::Index channels, Eigen::Index height, Eigen::Index width,
                        int quality);

}  // namespace segc
