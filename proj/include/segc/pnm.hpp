#pragma once

#include "segc/metrics.hpp"
#include "segc/tensor.hpp"

#include <filesystem>

namespace segc::pnm {

enum class Encoding { ascii, binary };

/// Writes a [3,H,W] image in [0,1] as P6 (binary) or P3 (ascii), maxval 255.
void write_image(const std::filesystem::path& path, const Tensor& image, Encoding enc = Encoding::binary);
/// Reads P3/P6 (colour) or P2/P5 (grey, replicated to three channels).
Tensor read_image(const std::filesystem::path& path);

/// Writes a mask as P5 (binary) or P2 (ascii) with 0/255 levels.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask, Encoding enc = Encoding::binary);
/// Reads a P2/P5 graymap; any nonzero level is foreground.
BinaryMask read_mask(const std::filesystem::path& path);

}  // namespace segc::pnm
