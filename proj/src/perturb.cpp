#include "segc/perturb.hpp"

#include "segc/color.hpp"
#include "segc/random.hpp"
#include "segc/softset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segc {

namespace {

constexpr double kMaxNoiseVariance = 0.01;
constexpr double kMaxDistortionLimit = 10.0;
constexpr double kMaxJitter = 0.5;
// A limit of 10 maps to a radial coefficient of 0.05 on unit-normalised radii.
constexpr double kDistortionScale = 0.005;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(std::string("PerturbationSpec: ") + msg);
}

}  // namespace

void PerturbationSpec::validate() const {
  require(noise_variance_max >= 0.0 && noise_variance_max <= kMaxNoiseVariance, "noise variance outside [0, 0.01]");
  require(quality_min >= 10 && quality_min <= quality_max && quality_max <= 100, "quality range outside [10, 100]");
  require(distortion_limit >= 0.0 && distortion_limit <= kMaxDistortionLimit, "distortion limit outside [0, 10]");
  for (double d : {brightness, contrast, saturation, hue}) {
    require(d >= 0.0 && d <= kMaxJitter, "jitter delta outside [0, 0.5]");
  }
  require(apply_probability >= 0.0 && apply_probability <= 1.0, "apply probability outside [0, 1]");
}

PerturbationSpec PerturbationSpec::none() {
  PerturbationSpec s;
  s.flip = s.rotate90 = s.gaussian_noise = s.compression = s.optical_distortion = s.color_jitter = false;
  return s;
}

double distortion_coefficient_bound(double distortion_limit) { return distortion_limit * kDistortionScale; }

AppliedPerturbation sample(const PerturbationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  AppliedPerturbation p;
  if (!(uniform01(rng) < spec.apply_probability)) return p;

  auto& geo = p.geometric;
  auto& photo = p.photometric;
  if (spec.flip) {
    geo.flip_horizontal = uniform01(rng) < 0.5;
    geo.flip_vertical = uniform01(rng) < 0.5;
  }
  if (spec.rotate90) geo.rot90 = static_cast<int>(uniform_int(rng, 0, 3));
  if (spec.optical_distortion) {
    const double bound = distortion_coefficient_bound(spec.distortion_limit);
    geo.distortion = uniform(rng, -bound, bound);
  }
  if (spec.color_jitter) {
    photo.brightness = uniform(rng, -spec.brightness, spec.brightness);
    photo.contrast = uniform(rng, -spec.contrast, spec.contrast);
    photo.saturation = uniform(rng, -spec.saturation, spec.saturation);
    photo.hue = uniform(rng, -spec.hue, spec.hue);
  }
  if (spec.compression) photo.quality = static_cast<int>(uniform_int(rng, spec.quality_min, spec.quality_max));
  if (spec.gaussian_noise) {
    photo.noise_variance = uniform(rng, 0.0, spec.noise_variance_max);
    photo.noise_seed = rng();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Geometry

namespace {

struct Planes {
  Eigen::Index channels, height, width;
};

Planes planes_of(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("perturbation: expected [C,H,W], got " + shape_string(t.shape()));
  return {static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)),
          static_cast<Eigen::Index>(t.dim(2))};
}

Array flip(const Array& src, const Planes& p, bool horizontal, bool vertical) {
  Array out(src.size());
  for (Eigen::Index c = 0; c < p.channels; ++c)
    for (Eigen::Index y = 0; y < p.height; ++y)
      for (Eigen::Index x = 0; x < p.width; ++x) {
        const Eigen::Index sy = vertical ? p.height - 1 - y : y;
        const Eigen::Index sx = horizontal ? p.width - 1 - x : x;
        out((c * p.height + y) * p.width + x) = src((c * p.height + sy) * p.width + sx);
      }
  return out;
}

// One counter-clockwise quarter turn: out[i][j] = in[j][W-1-i].
Array rotate_once(const Array& src, Planes& p) {
  Array out(src.size());
  const Eigen::Index h = p.height, w = p.width;
  for (Eigen::Index c = 0; c < p.channels; ++c)
    for (Eigen::Index i = 0; i < w; ++i)
      for (Eigen::Index j = 0; j < h; ++j) out((c * w + i) * h + j) = src((c * h + j) * w + (w - 1 - i));
  std::swap(p.height, p.width);
  return out;
}

Eigen::Index reflect101(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Array distort(const Array& src, const Planes& p, double lambda, Interpolation interp) {
  Array out(src.size());
  const double cx = 0.5 * static_cast<double>(p.width - 1);
  const double cy = 0.5 * static_cast<double>(p.height - 1);
  const double radius = std::max(std::max(cx, cy), 1.0);
  for (Eigen::Index y = 0; y < p.height; ++y) {
    for (Eigen::Index x = 0; x < p.width; ++x) {
      const double u = (static_cast<double>(x) - cx) / radius;
      const double v = (static_cast<double>(y) - cy) / radius;
      const double scale = 1.0 + lambda * (u * u + v * v);
      const double sx = cx + u * scale * radius;
      const double sy = cy + v * scale * radius;
      for (Eigen::Index c = 0; c < p.channels; ++c) {
        const Eigen::Index base = c * p.height * p.width;
        double value;
        if (interp == Interpolation::nearest) {
          const auto ix = reflect101(static_cast<Eigen::Index>(std::lround(sx)), p.width);
          const auto iy = reflect101(static_cast<Eigen::Index>(std::lround(sy)), p.height);
          value = src(base + iy * p.width + ix);
        } else {
          const double fx = std::floor(sx), fy = std::floor(sy);
          const double tx = sx - fx, ty = sy - fy;
          const auto x0 = static_cast<Eigen::Index>(fx), y0 = static_cast<Eigen::Index>(fy);
          const auto at = [&](Eigen::Index yy, Eigen::Index xx) {
            return src(base + reflect101(yy, p.height) * p.width + reflect101(xx, p.width));
          };
          value = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x0 + 1)) +
                  ty * ((1 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
        }
        out(base + y * p.width + x) = value;
      }
    }
  }
  return out;
}

Array apply_geometry(const GeometricPerturbation& g, Array data, Planes& p, Interpolation interp) {
  if (g.rot90 < 0 || g.rot90 > 3) throw std::invalid_argument("perturbation: rot90 must be in {0,1,2,3}");
  if (g.rot90 % 2 == 1 && p.height != p.width) {
    throw std::invalid_argument("perturbation: odd quarter turns need a square image");
  }
  if (g.flip_horizontal || g.flip_vertical) data = flip(data, p, g.flip_horizontal, g.flip_vertical);
  for (int k = 0; k < g.rot90; ++k) data = rotate_once(data, p);
  if (g.distortion != 0.0) data = distort(data, p, g.distortion, interp);
  return data;
}

}  // namespace

Tensor apply_geometric(const GeometricPerturbation& g, const Tensor& map, Interpolation interp) {
  Planes p = planes_of(map);
  if (g.is_identity()) return map.detach();
  Array data = apply_geometry(g, map.data(), p, interp);
  return Tensor({static_cast<std::size_t>(p.channels), static_cast<std::size_t>(p.height),
                 static_cast<std::size_t>(p.width)},
                std::move(data));
}

// ---------------------------------------------------------------------------
// Photometry

void compress_surrogate(Array& planes, Eigen::Index channels, Eigen::Index height, Eigen::Index width, int quality) {
  if (quality >= 100) return;
  const auto block = static_cast<Eigen::Index>(std::lround(1.0 + (100.0 - quality) / 30.0));
  const double levels = std::max(8.0, static_cast<double>(std::lround(256.0 * quality / 100.0)));
  for (Eigen::Index c = 0; c < channels; ++c) {
    double* plane = planes.data() + c * height * width;
    for (Eigen::Index by = 0; by < height; by += block) {
      for (Eigen::Index bx = 0; bx < width; bx += block) {
        const Eigen::Index ey = std::min(by + block, height), ex = std::min(bx + block, width);
        double acc = 0.0;
        for (Eigen::Index y = by; y < ey; ++y)
          for (Eigen::Index x = bx; x < ex; ++x) acc += plane[y * width + x];
        const double mean = acc / static_cast<double>((ey - by) * (ex - bx));
        const double q = std::round(mean * (levels - 1.0)) / (levels - 1.0);
        for (Eigen::Index y = by; y < ey; ++y)
          for (Eigen::Index x = bx; x < ex; ++x) plane[y * width + x] = q;
      }
    }
  }
}

namespace {

void apply_photometry(const PhotometricPerturbation& ph, Array& rgb, const Planes& p) {
  if (p.channels != 3) throw std::invalid_argument("perturbation: photometric transforms need 3 channels");
  if (ph.brightness != 0.0) {
    rgb *= 1.0 + ph.brightness;
    color::clamp_unit(rgb);
  }
  if (ph.contrast != 0.0) {
    color::scale_contrast(rgb, 1.0 + ph.contrast);
    color::clamp_unit(rgb);
  }
  if (ph.saturation != 0.0) {
    color::scale_saturation(rgb, 1.0 + ph.saturation);
    color::clamp_unit(rgb);
  }
  if (ph.hue != 0.0) {
    color::rotate_hue(rgb, ph.hue);
    color::clamp_unit(rgb);
  }
  compress_surrogate(rgb, p.channels, p.height, p.width, ph.quality);
  if (ph.noise_variance > 0.0) {
    Rng rng(ph.noise_seed);
    const double sd = std::sqrt(ph.noise_variance);
    for (Eigen::Index i = 0; i < rgb.size(); ++i) rgb(i) += sd * normal(rng);
  }
  color::clamp_unit(rgb);
}

}  // namespace

Tensor apply_to_image(const AppliedPerturbation& p, const Tensor& image) {
  Planes planes = planes_of(image);
  if (planes.channels != 3) throw std::invalid_argument("apply_to_image: expected [3,H,W]");
  require_unit_range(image, "apply_to_image");
  if (p.is_identity()) return image.detach();
  Array data = apply_geometry(p.geometric, image.data(), planes, Interpolation::bilinear);
  if (!p.photometric.is_identity()) apply_photometry(p.photometric, data, planes);
  color::clamp_unit(data);
  return Tensor({3, static_cast<std::size_t>(planes.height), static_cast<std::size_t>(planes.width)}, std::move(data));
}

BinaryMask apply_to_mask(const AppliedPerturbation& p, const BinaryMask& mask) {
  if (p.geometric.is_identity()) return mask;
  const Tensor moved = apply_geometric(p.geometric, mask.to_tensor(), Interpolation::nearest);
  return BinaryMask::from_tensor(moved);
}

}  // namespace segc
