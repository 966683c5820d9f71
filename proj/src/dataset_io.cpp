#include "segc/dataset_io.hpp"

#include "segc/pnm.hpp"
#include "segc/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace segc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, index, ext);
  return buf;
}

json write_samples(const fs::path& root, const std::string& dirname, const EnvironmentData& env,
                   const char* split) {
  json list = json::array();
  for (const SampleRecord& s : env.samples) {
    const std::string image = dirname + "/" + numbered("img", s.index, "ppm");
    const std::string mask = dirname + "/" + numbered("mask", s.index, "pgm");
    pnm::write_image(root / image, s.image);
    pnm::write_mask(root / mask, s.mask);
    list.push_back({{"image", image}, {"mask", mask}, {"index", s.index}, {"seed", s.seed}, {"split", split}});
  }
  return list;
}

}  // namespace

void write_suite(const fs::path& dir, const Suite& suite, const SuiteConfig& config, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format"] = "segc-dataset";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  manifest["image_size"] = config.in_distribution.image_size;
  manifest["config"] = to_json(config);

  const std::string id_dir = config.in_distribution.name;
  fs::create_directories(dir / id_dir);
  json id_samples = write_samples(dir, id_dir, suite.train, "train");
  for (auto& s : write_samples(dir, id_dir, suite.val, "val")) id_samples.push_back(s);
  for (auto& s : write_samples(dir, id_dir, suite.test_id, "test")) id_samples.push_back(s);
  json envs = json::array();
  envs.push_back({{"name", id_dir}, {"role", "in_distribution"}, {"samples", id_samples}});
  for (const EnvironmentData& e : suite.ood) {
    fs::create_directories(dir / e.name);
    envs.push_back({{"name", e.name}, {"role", "ood"}, {"samples", write_samples(dir, e.name, e, "test")}});
  }
  manifest["environments"] = envs;

  std::ofstream os(dir / kManifest);
  if (!os) throw std::runtime_error("cannot write " + (dir / kManifest).string());
  os << manifest.dump(2) << '\n';
}

LoadedSuite load_suite(const fs::path& dir) {
  std::ifstream is(dir / kManifest);
  if (!is) throw std::runtime_error("no manifest.json in " + dir.string());
  const json manifest = json::parse(is);
  if (manifest.value("format", "") != "segc-dataset") throw std::runtime_error("manifest: unexpected format");

  LoadedSuite out;
  out.seed = manifest.at("seed").get<std::uint64_t>();
  out.config = SuiteConfig::defaults();
  update_from_json(out.config, manifest.at("config"));

  out.suite.train.name = "train";
  out.suite.val.name = "val";
  out.suite.test_id.name = "test_id";
  for (const json& env : manifest.at("environments")) {
    const std::string name = env.at("name").get<std::string>();
    const bool ood = env.at("role") == "ood";
    EnvironmentData data{name, {}};
    for (const json& s : env.at("samples")) {
      SampleRecord rec;
      rec.image = pnm::read_image(dir / s.at("image").get<std::string>());
      rec.mask = pnm::read_mask(dir / s.at("mask").get<std::string>());
      rec.environment = name;
      rec.index = s.at("index").get<int>();
      rec.seed = s.at("seed").get<std::uint64_t>();
      if (ood) {
        data.samples.push_back(std::move(rec));
        continue;
      }
      const std::string split = s.at("split").get<std::string>();
      if (split == "train") out.suite.train.samples.push_back(std::move(rec));
      else if (split == "val") out.suite.val.samples.push_back(std::move(rec));
      else if (split == "test") out.suite.test_id.samples.push_back(std::move(rec));
      else throw std::runtime_error("manifest: unknown split '" + split + "'");
    }
    if (ood) out.suite.ood.push_back(std::move(data));
  }
  return out;
}

}  // namespace segc
