#pragma once

#include "segc/tensor.hpp"

namespace segc::color {

// In-place helpers over planar RGB images stored as [3,H,W] arrays.

void clamp_unit(Array& rgb);
/// Rotation of every pixel about the grey axis by turns * 2*pi.
void rotate_hue(Array& rgb, double turns);
/// (x - m) * factor + m with m the mean luminance.
void scale_contrast(Array& rgb, double factor);
void scale_saturation(Array& rgb, double factor);
double mean_luminance(const Array& rgb);

}  // namespace segc::color
