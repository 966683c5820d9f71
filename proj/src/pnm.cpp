#include "segc/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segc::pnm {

namespace {

struct Raster {
  int channels = 0;
  long width = 0, height = 0;
  int maxval = 255;
  std::vector<int> samples;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("pnm: cannot open " + path.string() + " for writing");
  return os;
}

void write_raster(const std::filesystem::path& path, const Raster& r, Encoding enc) {
  auto os = open_out(path);
  const char* magic = r.channels == 3 ? (enc == Encoding::binary ? "P6" : "P3") : (enc == Encoding::binary ? "P5" : "P2");
  os << magic << '\n' << r.width << ' ' << r.height << '\n' << r.maxval << '\n';
  if (enc == Encoding::binary) {
    std::string bytes(r.samples.size(), '\0');
    for (std::size_t i = 0; i < r.samples.size(); ++i) bytes[i] = static_cast<char>(r.samples[i]);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  } else {
    const std::size_t per_row = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.channels);
    for (std::size_t i = 0; i < r.samples.size(); ++i) os << r.samples[i] << ((i + 1) % per_row == 0 ? '\n' : ' ');
  }
  if (!os) throw std::runtime_error("pnm: write failed for " + path.string());
}

// Next whitespace-delimited header token, skipping '#' comments.
long header_int(std::istream& is, const std::filesystem::path& path) {
  int c;
  while ((c = is.peek()) != EOF) {
    if (std::isspace(c)) {
      is.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(is, skip);
    } else {
      break;
    }
  }
  long v;
  if (!(is >> v)) throw std::runtime_error("pnm: malformed header in " + path.string());
  return v;
}

Raster read_raster(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("pnm: cannot open " + path.string());
  char magic[2];
  if (!is.read(magic, 2) || magic[0] != 'P') throw std::runtime_error("pnm: not a PNM file: " + path.string());
  Raster r;
  bool binary;
  switch (magic[1]) {
    case '2': r.channels = 1; binary = false; break;
    case '3': r.channels = 3; binary = false; break;
    case '5': r.channels = 1; binary = true; break;
    case '6': r.channels = 3; binary = true; break;
    default: throw std::runtime_error("pnm: unsupported format in " + path.string());
  }
  r.width = header_int(is, path);
  r.height = header_int(is, path);
  r.maxval = static_cast<int>(header_int(is, path));
  if (r.width < 1 || r.height < 1 || r.maxval < 1 || r.maxval > 255) {
    throw std::runtime_error("pnm: unsupported dimensions or maxval in " + path.string());
  }
  const auto n = static_cast<std::size_t>(r.width * r.height * r.channels);
  r.samples.resize(n);
  if (binary) {
    is.get();  // single whitespace after maxval
    std::string bytes(n, '\0');
    if (!is.read(bytes.data(), static_cast<std::streamsize>(n))) throw std::runtime_error("pnm: truncated " + path.string());
    for (std::size_t i = 0; i < n; ++i) r.samples[i] = static_cast<unsigned char>(bytes[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(is >> r.samples[i])) throw std::runtime_error("pnm: truncated " + path.string());
    }
  }
  for (int v : r.samples) {
    if (v < 0 || v > r.maxval) throw std::runtime_error("pnm: sample exceeds maxval in " + path.string());
  }
  return r;
}

}  // namespace

void write_image(const std::filesystem::path& path, const Tensor& image, Encoding enc) {
  if (image.rank() != 3 || image.dim(0) != 3) throw std::invalid_argument("pnm: expected [3,H,W] image");
  Raster r;
  r.channels = 3;
  r.height = static_cast<long>(image.dim(1));
  r.width = static_cast<long>(image.dim(2));
  const std::size_t plane = image.dim(1) * image.dim(2);
  r.samples.resize(3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(image[c * plane + i], 0.0, 1.0);
      r.samples[3 * i + c] = static_cast<int>(std::lround(v * 255.0));
    }
  write_raster(path, r, enc);
}

Tensor read_image(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  const auto plane = static_cast<std::size_t>(r.width * r.height);
  Array data(static_cast<Eigen::Index>(3 * plane));
  const double scale = static_cast<double>(r.maxval);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const int v = r.channels == 3 ? r.samples[3 * i + c] : r.samples[i];
      data(static_cast<Eigen::Index>(c * plane + i)) = static_cast<double>(v) / scale;
    }
  return Tensor({3, static_cast<std::size_t>(r.height), static_cast<std::size_t>(r.width)}, std::move(data));
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask, Encoding enc) {
  Raster r;
  r.channels = 1;
  r.height = mask.height();
  r.width = mask.width();
  r.samples.reserve(static_cast<std::size_t>(r.width * r.height));
  for (Eigen::Index y = 0; y < mask.height(); ++y)
    for (Eigen::Index x = 0; x < mask.width(); ++x) r.samples.push_back(mask(y, x) ? 255 : 0);
  write_raster(path, r, enc);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  if (r.channels != 1) throw std::runtime_error("pnm: mask must be a graymap: " + path.string());
  BinaryMask m(r.height, r.width);
  for (long y = 0; y < r.height; ++y)
    for (long x = 0; x < r.width; ++x) m.set(y, x, r.samples[static_cast<std::size_t>(y * r.width + x)] != 0);
  return m;
}

}  // namespace segc::pnm
