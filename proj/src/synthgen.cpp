#include "segc/synthgen.hpp"

#include "segc/color.hpp"
#include "segc/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace segc {

void EnvironmentSpec::validate() const {
  const auto fail = [this](const std::string& why) {
    throw std::invalid_argument("environment '" + name + "': " + why);
  };
  if (name.empty()) fail("name is empty");
  if (image_size < 8 || image_size % 2 != 0) fail("image_size must be even and >= 8");
  if (n_images < 0) fail("n_images must be >= 0");
  if (blobs_min < 1 || blobs_max < blobs_min) fail("blob count range invalid");
  if (!(radius_min > 0.0 && radius_max >= radius_min)) fail("blob radius range invalid");
  if (2.0 * radius_max + 3.0 > image_size) fail("blob cannot fit: radius_max too large for image_size");
  if (shift.contrast_scale <= 0.0 || shift.noise_variance < 0.0 || shift.eccentricity_scale < 0.0 ||
      shift.vignette < 0.0 || shift.vignette > 1.0) {
    fail("shift parameters out of range");
  }
}

namespace {

struct Ellipse {
  double cx, cy, a, b, angle;

  // Normalised radius; <= 1 inside.
  double rho2(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy, v = -s * dx + c * dy;
    return (u * u) / (a * a) + (v * v) / (b * b);
  }
};

double texture_at(const TextureSpec& t, double phase, double x, double y, double speckle) {
  const double k = 2.0 * std::numbers::pi / t.wave_period;
  return t.wave_amplitude * std::sin(k * (0.8 * x + 0.6 * y) + phase) + t.speckle * speckle;
}

SampleRecord render(const EnvironmentSpec& spec, std::uint64_t seed, int index) {
  Rng rng(seed);
  const int n = spec.image_size;
  const double size = static_cast<double>(n);

  std::vector<Ellipse> blobs(static_cast<std::size_t>(uniform_int(rng, spec.blobs_min, spec.blobs_max)));
  for (Ellipse& e : blobs) {
    const double r = uniform(rng, spec.radius_min, spec.radius_max);
    const double q = uniform(rng, 0.6, 1.0);
    e.a = r;
    e.b = r * std::max(0.25, 1.0 - (1.0 - q) * spec.shift.eccentricity_scale);
    e.angle = uniform(rng, 0.0, std::numbers::pi);
    e.cx = uniform(rng, r + 1.0, size - 2.0 - r);
    e.cy = uniform(rng, r + 1.0, size - 2.0 - r);
  }
  const double bg_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double fg_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);

  const Eigen::Index plane = static_cast<Eigen::Index>(n) * n;
  Array rgb(3 * plane);
  BinaryMask mask(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double best = 2.0;
      for (const Ellipse& e : blobs) best = std::min(best, e.rho2(x, y));
      const bool inside = best <= 1.0;
      const double speckle = uniform(rng, -1.0, 1.0);
      const TextureSpec& tex = inside ? spec.foreground : spec.background;
      double shade = texture_at(tex, inside ? fg_phase : bg_phase, x, y, speckle);
      if (inside) shade -= 0.12 * best;  // darker rim
      const Eigen::Index i = static_cast<Eigen::Index>(y) * n + x;
      rgb(i) = tex.base.r + shade;
      rgb(plane + i) = tex.base.g + shade;
      rgb(2 * plane + i) = tex.base.b + shade;
      mask.set(y, x, inside);
    }
  }

  const ShiftSpec& sh = spec.shift;
  color::clamp_unit(rgb);
  if (sh.hue_shift != 0.0) color::rotate_hue(rgb, sh.hue_shift);
  if (sh.contrast_scale != 1.0) color::scale_contrast(rgb, sh.contrast_scale);
  if (sh.vignette > 0.0) {
    const double c = 0.5 * (size - 1.0);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double r2 = ((x - c) * (x - c) + (y - c) * (y - c)) / (2.0 * c * c);
        const double f = 1.0 - sh.vignette * r2;
        for (Eigen::Index ch = 0; ch < 3; ++ch) rgb(ch * plane + static_cast<Eigen::Index>(y) * n + x) *= f;
      }
  }
  if (sh.noise_variance > 0.0) {
    const double sd = std::sqrt(sh.noise_variance);
    for (Eigen::Index i = 0; i < rgb.size(); ++i) rgb(i) += sd * normal(rng);
  }
  color::clamp_unit(rgb);
  rgb = (rgb * 255.0).round() / 255.0;

  SampleRecord rec;
  rec.image = Tensor({3, static_cast<std::size_t>(n), static_cast<std::size_t>(n)}, std::move(rgb));
  rec.mask = std::move(mask);
  rec.environment = spec.name;
  rec.index = index;
  rec.seed = seed;
  return rec;
}

}  // namespace

std::vector<SampleRecord> generate(const EnvironmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<SampleRecord> out;
  out.reserve(static_cast<std::size_t>(spec.n_images));
  const std::uint64_t stream = derive_seed(seed, hash_name(spec.name));
  for (int i = 0; i < spec.n_images; ++i) out.push_back(render(spec, derive_seed(stream, i), i));
  return out;
}

SuiteConfig SuiteConfig::defaults() {
  SuiteConfig c;
  c.in_distribution.name = "in_distribution";
  c.in_distribution.n_images = 200;

  EnvironmentSpec a = c.in_distribution;
  a.name = "ood_hue_contrast";
  a.n_images = 40;
  a.shift.hue_shift = 0.12;
  a.shift.contrast_scale = 0.7;

  EnvironmentSpec b = a;
  b.name = "ood_noise_vignette";
  b.shift = ShiftSpec{};
  b.shift.noise_variance = 0.02;
  b.shift.vignette = 0.5;

  EnvironmentSpec cshift = a;
  cshift.name = "ood_shape_texture";
  cshift.shift = ShiftSpec{};
  cshift.shift.eccentricity_scale = 2.0;
  cshift.foreground.speckle = 0.15;
  cshift.background.wave_amplitude = 0.10;

  c.ood = {a, b, cshift};
  return c;
}

void SuiteConfig::validate() const {
  in_distribution.validate();
  if (in_distribution.n_images < 10) throw std::invalid_argument("suite: need >= 10 in-distribution images to split");
  if (ood.size() != 3) throw std::invalid_argument("suite: exactly three OOD environments expected");
  for (const auto& e : ood) {
    e.validate();
    if (e.image_size != in_distribution.image_size) throw std::invalid_argument("suite: environments must share image_size");
    if (e.name == in_distribution.name) throw std::invalid_argument("suite: OOD environment reuses the ID name");
  }
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t train = n * 8 / 10;
  const std::size_t val = n / 10;
  return {train, val, n - train - val};
}

Suite standard_suite(std::uint64_t seed, const SuiteConfig& config) {
  config.validate();
  std::vector<SampleRecord> id = generate(config.in_distribution, seed);
  const SplitSizes sizes = split_sizes(id.size());
  Suite s;
  s.train.name = "train";
  s.val.name = "val";
  s.test_id.name = "test_id";
  const auto first = std::make_move_iterator(id.begin());
  s.train.samples.assign(first, first + static_cast<long>(sizes.train));
  s.val.samples.assign(first + static_cast<long>(sizes.train), first + static_cast<long>(sizes.train + sizes.val));
  s.test_id.samples.assign(first + static_cast<long>(sizes.train + sizes.val), std::make_move_iterator(id.end()));
  for (const EnvironmentSpec& e : config.ood) s.ood.push_back({e.name, generate(e, seed)});
  return s;
}

}  // namespace segc
