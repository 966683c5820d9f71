#include "segc/serialize.hpp"

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace segc {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

void read_rgb(const json& j, const char* key, Rgb& c) {
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_array() || it->size() != 3) throw std::invalid_argument(std::string(key) + ": expected [r,g,b]");
    c = {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
  }
}

json texture_json(const TextureSpec& t) {
  return {{"base", rgb_json(t.base)}, {"speckle", t.speckle}, {"wave_amplitude", t.wave_amplitude},
          {"wave_period", t.wave_period}};
}

void read_texture(const json& j, TextureSpec& t) {
  reject_unknown(j, {"base", "speckle", "wave_amplitude", "wave_period"}, "texture");
  read_rgb(j, "base", t.base);
  read(j, "speckle", t.speckle);
  read(j, "wave_amplitude", t.wave_amplitude);
  read(j, "wave_period", t.wave_period);
}

}  // namespace

json to_json(const PerturbationSpec& s) {
  return {{"flip", s.flip},
          {"rotate90", s.rotate90},
          {"gaussian_noise", s.gaussian_noise},
          {"noise_variance_max", s.noise_variance_max},
          {"compression", s.compression},
          {"quality_min", s.quality_min},
          {"quality_max", s.quality_max},
          {"optical_distortion", s.optical_distortion},
          {"distortion_limit", s.distortion_limit},
          {"color_jitter", s.color_jitter},
          {"brightness", s.brightness},
          {"contrast", s.contrast},
          {"saturation", s.saturation},
          {"hue", s.hue},
          {"apply_probability", s.apply_probability}};
}

void update_from_json(PerturbationSpec& s, const json& j) {
  reject_unknown(j,
                 {"flip", "rotate90", "gaussian_noise", "noise_variance_max", "compression", "quality_min",
                  "quality_max", "optical_distortion", "distortion_limit", "color_jitter", "brightness", "contrast",
                  "saturation", "hue", "apply_probability"},
                 "perturbation");
  read(j, "flip", s.flip);
  read(j, "rotate90", s.rotate90);
  read(j, "gaussian_noise", s.gaussian_noise);
  read(j, "noise_variance_max", s.noise_variance_max);
  read(j, "compression", s.compression);
  read(j, "quality_min", s.quality_min);
  read(j, "quality_max", s.quality_max);
  read(j, "optical_distortion", s.optical_distortion);
  read(j, "distortion_limit", s.distortion_limit);
  read(j, "color_jitter", s.color_jitter);
  read(j, "brightness", s.brightness);
  read(j, "contrast", s.contrast);
  read(j, "saturation", s.saturation);
  read(j, "hue", s.hue);
  read(j, "apply_probability", s.apply_probability);
  s.validate();
}

json to_json(const EnvironmentSpec& s) {
  return {{"name", s.name},
          {"image_size", s.image_size},
          {"n_images", s.n_images},
          {"blobs_min", s.blobs_min},
          {"blobs_max", s.blobs_max},
          {"radius_min", s.radius_min},
          {"radius_max", s.radius_max},
          {"foreground", texture_json(s.foreground)},
          {"background", texture_json(s.background)},
          {"shift",
           {{"hue_shift", s.shift.hue_shift},
            {"contrast_scale", s.shift.contrast_scale},
            {"noise_variance", s.shift.noise_variance},
            {"eccentricity_scale", s.shift.eccentricity_scale},
            {"vignette", s.shift.vignette}}}};
}

void update_from_json(EnvironmentSpec& s, const json& j) {
  reject_unknown(j,
                 {"name", "image_size", "n_images", "blobs_min", "blobs_max", "radius_min", "radius_max",
                  "foreground", "background", "shift"},
                 "environment");
  read(j, "name", s.name);
  read(j, "image_size", s.image_size);
  read(j, "n_images", s.n_images);
  read(j, "blobs_min", s.blobs_min);
  read(j, "blobs_max", s.blobs_max);
  read(j, "radius_min", s.radius_min);
  read(j, "radius_max", s.radius_max);
  if (j.contains("foreground")) read_texture(j["foreground"], s.foreground);
  if (j.contains("background")) read_texture(j["background"], s.background);
  if (j.contains("shift")) {
    const json& sh = j["shift"];
    reject_unknown(sh, {"hue_shift", "contrast_scale", "noise_variance", "eccentricity_scale", "vignette"}, "shift");
    read(sh, "hue_shift", s.shift.hue_shift);
    read(sh, "contrast_scale", s.shift.contrast_scale);
    read(sh, "noise_variance", s.shift.noise_variance);
    read(sh, "eccentricity_scale", s.shift.eccentricity_scale);
    read(sh, "vignette", s.shift.vignette);
  }
  s.validate();
}

json to_json(const SuiteConfig& c) {
  json ood = json::array();
  for (const auto& e : c.ood) ood.push_back(to_json(e));
  return {{"in_distribution", to_json(c.in_distribution)}, {"ood", ood}};
}

void update_from_json(SuiteConfig& c, const json& j) {
  reject_unknown(j, {"in_distribution", "ood"}, "suite config");
  if (j.contains("in_distribution")) update_from_json(c.in_distribution, j["in_distribution"]);
  if (j.contains("ood")) {
    const json& list = j["ood"];
    if (!list.is_array() || list.size() != c.ood.size()) {
      throw std::invalid_argument("suite config: 'ood' must list exactly " + std::to_string(c.ood.size()) + " environments");
    }
    for (std::size_t i = 0; i < list.size(); ++i) update_from_json(c.ood[i], list[i]);
  }
  c.validate();
}

json to_json(const TrainConfig& c) {
  return {{"regime", to_string(c.regime)},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
          {"scheduler_t0", c.scheduler_t0},
          {"scheduler_t_mult", c.scheduler_t_mult},
          {"lr_min", c.lr_min},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"pretrain_epochs", c.pretrain_epochs},
          {"seed", c.seed},
          {"perturbation", to_json(c.perturbation)},
          {"dynamic_weighting", c.dynamic_weighting},
          {"threshold", c.threshold},
          {"border_margin", c.border_margin}};
}

void update_from_json(TrainConfig& c, const json& j) {
  reject_unknown(j,
                 {"regime", "batch_size", "learning_rate", "adam", "scheduler_t0", "scheduler_t_mult", "lr_min",
                  "max_epochs", "patience", "pretrain_epochs", "seed", "perturbation", "dynamic_weighting", "threshold",
                  "border_margin"},
                 "train config");
  if (j.contains("regime")) c.regime = parse_regime(j["regime"].get<std::string>());
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  if (j.contains("adam")) {
    const json& a = j["adam"];
    reject_unknown(a, {"beta1", "beta2", "epsilon"}, "adam");
    read(a, "beta1", c.adam.beta1);
    read(a, "beta2", c.adam.beta2);
    read(a, "epsilon", c.adam.epsilon);
  }
  read(j, "scheduler_t0", c.scheduler_t0);
  read(j, "scheduler_t_mult", c.scheduler_t_mult);
  read(j, "lr_min", c.lr_min);
  read(j, "max_epochs", c.max_epochs);
  read(j, "patience", c.patience);
  read(j, "pretrain_epochs", c.pretrain_epochs);
  read(j, "seed", c.seed);
  if (j.contains("perturbation")) update_from_json(c.perturbation, j["perturbation"]);
  read(j, "dynamic_weighting", c.dynamic_weighting);
  read(j, "threshold", c.threshold);
  read(j, "border_margin", c.border_margin);
  c.validate();
}

}  // namespace segc
