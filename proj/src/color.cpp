#include "segc/color.hpp"

#include <cmath>
#include <numbers>

namespace segc::color {

namespace {

constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

Eigen::Index plane_size(const Array& rgb) { return rgb.size() / 3; }

}  // namespace

void clamp_unit(Array& rgb) { rgb = rgb.max(0.0).min(1.0); }

double mean_luminance(const Array& rgb) {
  const Eigen::Index n = plane_size(rgb);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += kLumR * rgb(i) + kLumG * rgb(n + i) + kLumB * rgb(2 * n + i);
  return acc / static_cast<double>(n);
}

void rotate_hue(Array& rgb, double turns) {
  // Rodrigues rotation about (1,1,1)/sqrt(3).
  const double theta = 2.0 * std::numbers::pi * turns;
  const double c = std::cos(theta), s = std::sin(theta);
  const double k = (1.0 - c) / 3.0;
  const double r3 = s / std::sqrt(3.0);
  const double m00 = c + k, m01 = k - r3, m02 = k + r3;
  const double m10 = k + r3, m11 = c + k, m12 = k - r3;
  const double m20 = k - r3, m21 = k + r3, m22 = c + k;
  const Eigen::Index n = plane_size(rgb);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = rgb(i), g = rgb(n + i), b = rgb(2 * n + i);
    rgb(i) = m00 * r + m01 * g + m02 * b;
    rgb(n + i) = m10 * r + m11 * g + m12 * b;
    rgb(2 * n + i) = m20 * r + m21 * g + m22 * b;
  }
}

void scale_contrast(Array& rgb, double factor) {
  const double m = mean_luminance(rgb);
  rgb = (rgb - m) * factor + m;
}

void scale_saturation(Array& rgb, double factor) {
  const Eigen::Index n = plane_size(rgb);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double grey = kLumR * rgb(i) + kLumG * rgb(n + i) + kLumB * rgb(2 * n + i);
    for (Eigen::Index ch = 0; ch < 3; ++ch) {
      double& v = rgb(ch * n + i);
      v = grey + (v - grey) * factor;
    }
  }
}

}  // namespace segc::color
