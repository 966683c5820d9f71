#include "segc/app.hpp"

#include "segc/dataset_io.hpp"
#include "segc/loss.hpp"
#include "segc/metrics.hpp"
#include "segc/random.hpp"
#include "segc/serialize.hpp"
#include "segc/softset.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace segc {

using nlohmann::json;

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("config file not found: " + path.string());
  AppConfig cfg;
  try {
    const json j = json::parse(is);
    if (!j.is_object()) throw UsageError("config: top level must be an object");
    for (const auto& [key, _] : j.items()) {
      if (key != "seed" && key != "suite" && key != "train") throw UsageError("config: unknown key '" + key + "'");
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("suite")) {
      update_from_json(cfg.suite, j["suite"]);
      cfg.suite.validate();
    }
    if (j.contains("train")) {
      TrainConfig probe = TrainConfig::desk();
      update_from_json(probe, j["train"]);
      cfg.train_overrides = j["train"];
    }
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return cfg;
}

TrainConfig preset_config(const std::string& name) {
  if (name == "desk") return TrainConfig::desk();
  if (name == "paper") return TrainConfig::paper();
  throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
}

std::vector<Regime> parse_regime_list(const std::string& csv) {
  std::vector<Regime> out;
  std::istringstream is(csv);
  std::string name;
  while (std::getline(is, name, ',')) {
    if (name.empty()) continue;
    try {
      const Regime r = parse_regime(name);
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("no regimes given");
  return out;
}

TrainConfig resolve_train_config(const ExperimentOptions& options, Regime regime, std::uint64_t seed) {
  TrainConfig cfg = preset_config(options.preset);
  try {
    update_from_json(cfg, options.train_overrides);
  } catch (const std::exception& e) {
    throw UsageError(std::string("train config: ") + e.what());
  }
  cfg.regime = regime;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::vector<ResultRow> evaluate_run(const TinySegNet& model, const Suite& suite, const std::string& id_environment,
                                    Regime regime, std::uint64_t seed) {
  std::vector<ResultRow> rows;
  rows.push_back({to_string(regime), seed, id_environment, evaluate(model, suite.test_id).mean_iou});
  for (const auto& env : suite.ood) rows.push_back({to_string(regime), seed, env.name, evaluate(model, env).mean_iou});
  return rows;
}

namespace {

struct Job {
  Regime regime;
  std::uint64_t seed;
};

std::vector<ResultRow> run_one(const ExperimentOptions& options, const Job& job, const LoadedSuite& data) {
  const TrainConfig cfg = resolve_train_config(options, job.regime, job.seed);
  const auto start = std::chrono::steady_clock::now();
  const TrainResult result = train(cfg, data.suite);
  std::vector<ResultRow> rows = evaluate_run(result.model, data.suite, data.config.in_distribution.name, job.regime,
                                             job.seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto dir = options.out_dir / "runs" / (to_string(job.regime) + "_seed" + std::to_string(job.seed));
  std::filesystem::create_directories(dir);
  write_history_csv(dir / "history.csv", result.history);
  save_checkpoint(dir / "model.bin", result.model, to_string(job.regime));

  json metrics = json::object();
  for (const auto& r : rows) metrics[r.environment] = r.mean_iou;
  const auto& h = result.history;
  const json summary = {{"regime", to_string(job.regime)},
                        {"seed", job.seed},
                        {"config", to_json(cfg)},
                        {"data_seed", data.seed},
                        {"epochs_run", h.epochs.size()},
                        {"best_epoch", h.best_epoch},
                        {"stopped_early", h.stopped_early},
                        {"best_val_loss", h.best_epoch >= 0 ? h.epochs[static_cast<std::size_t>(h.best_epoch)].val_loss : 0.0},
                        {"pretrain_loss", h.pretrain_loss},
                        {"forward_passes", h.forward_passes},
                        {"backward_passes", h.backward_passes},
                        {"batches", h.batches},
                        {"mean_iou", metrics},
                        {"wall_time_seconds", seconds}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  return rows;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentOptions& options, std::ostream& log) {
  if (options.seeds < 1) throw UsageError("--seeds must be >= 1");
  if (options.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (!std::filesystem::exists(options.data_dir / "manifest.json")) {
    throw UsageError("no manifest.json in " + options.data_dir.string() + " (run gen-data first)");
  }
  const LoadedSuite data = load_suite(options.data_dir);
  // Resolve once up front so configuration errors surface before any training.
  const TrainConfig echo = resolve_train_config(options, options.regimes.front(), options.first_seed);
  json echo_json = to_json(echo);
  echo_json.erase("regime");
  echo_json.erase("seed");
  log << "preset " << options.preset << ": " << echo_json.dump() << '\n';

  std::vector<Job> jobs;
  for (Regime r : options.regimes)
    for (int k = 0; k < options.seeds; ++k) jobs.push_back({r, options.first_seed + static_cast<std::uint64_t>(k)});

  std::vector<std::vector<ResultRow>> results(jobs.size());
  std::vector<char> failed(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const std::string tag = to_string(job.regime) + " seed " + std::to_string(job.seed);
      try {
        const auto start = std::chrono::steady_clock::now();
        results[i] = run_one(options, job, data);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(log_mutex);
        log << '[' << ++done << '/' << jobs.size() << "] " << tag << ": ";
        for (const auto& r : results[i]) log << r.environment << '=' << r.mean_iou << ' ';
        log << '(' << static_cast<long>(s) << " s)\n" << std::flush;
      } catch (const std::exception& e) {
        failed[i] = 1;
        std::lock_guard lock(log_mutex);
        log << '[' << ++done << '/' << jobs.size() << "] " << tag << " FAILED: " << e.what() << '\n' << std::flush;
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.jobs), jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  ExperimentOutcome out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out.failed_runs += failed[i];
    out.rows.insert(out.rows.end(), results[i].begin(), results[i].end());
  }
  sort_canonical(out.rows, data.config.in_distribution.name);
  std::filesystem::create_directories(options.out_dir);
  write_results_csv(options.out_dir / "results.csv", out.rows);
  return out;
}

// ---------------------------------------------------------------------------
// grad-check and selftest

namespace {

Tensor random_unit(Rng& rng, const Shape& shape, double lo, double hi) {
  Array a(static_cast<Eigen::Index>(shape_size(shape)));
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform(rng, lo, hi);
  return Tensor(shape, std::move(a));
}

Tensor random_binary(Rng& rng, const Shape& shape) {
  Array a(static_cast<Eigen::Index>(shape_size(shape)));
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
  return Tensor(shape, std::move(a));
}

// Largest error over a random subsample of (parameter tensor, element) pairs.
double model_subsample_check(std::uint64_t seed, int samples) {
  Rng rng(derive_seed(seed, hash_name("grad-check.model")));
  const TinySegNet model = TinySegNet::init(seed);
  const std::vector<Tensor> values = model.values();
  const Tensor image = random_unit(rng, {3, 8, 8}, 0.0, 1.0);
  const Tensor label = random_binary(rng, {1, 8, 8});
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto which = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(values.size()) - 1));
    const auto index = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(values[which].size()) - 1));
    const auto f = [&](const Tensor& p) {
      std::vector<Tensor> params = values;
      params[which] = p;
      return jaccard_loss(label, forward(params, image));
    };
    const std::size_t idx[] = {index};
    worst = std::max(worst, grad_check(f, values[which], idx));
  }
  return worst;
}

}  // namespace

std::vector<GradCheckResult> run_grad_check(std::uint64_t seed, int trials) {
  GradCheckResult jac{"jaccard_loss", 0.0, 1e-4}, sil_y{"sil_loss d/dyhat", 0.0, 1e-4},
      sil_a{"sil_loss d/dahat", 0.0, 1e-4}, lf{"label_free_sil d/dyhat", 0.0, 1e-4},
      lf_a{"label_free_sil d/dahat", 0.0, 1e-4}, model{"model loss (16-parameter subsample)", 0.0, 1e-3};
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, hash_name("grad-check"), t));
    const Shape shape{2, 4, 4};
    const Tensor y = random_binary(rng, shape), a = random_binary(rng, shape);
    const Tensor yhat = random_unit(rng, shape, 0.05, 0.95), ahat = random_unit(rng, shape, 0.05, 0.95);
    const Tensor eps = random_unit(rng, shape, 0.05, 0.95);
    jac.max_relative_error = std::max(jac.max_relative_error, grad_check([&](const Tensor& p) { return jaccard_loss(y, p); }, yhat));
    sil_y.max_relative_error = std::max(
        sil_y.max_relative_error, grad_check([&](const Tensor& p) { return sil_loss({y, p, a, ahat}); }, yhat));
    sil_a.max_relative_error = std::max(
        sil_a.max_relative_error, grad_check([&](const Tensor& p) { return sil_loss({y, yhat, a, p}); }, ahat));
    lf.max_relative_error = std::max(
        lf.max_relative_error, grad_check([&](const Tensor& p) { return label_free_sil(p, ahat, eps); }, yhat));
    lf_a.max_relative_error = std::max(
        lf_a.max_relative_error, grad_check([&](const Tensor& p) { return label_free_sil(yhat, p, eps); }, ahat));
    model.max_relative_error = std::max(model.max_relative_error, model_subsample_check(seed + static_cast<std::uint64_t>(t), 16));
  }
  return {jac, sil_y, sil_a, lf, lf_a, model};
}

namespace {

std::string g3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::vector<SelftestResult> run_selftest(std::uint64_t seed) {
  std::vector<SelftestResult> out;
  const auto record = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    long mismatches = 0;
    for (unsigned code = 0; code < 65536; ++code) {
      BinaryMask m[4] = {BinaryMask(2, 2), BinaryMask(2, 2), BinaryMask(2, 2), BinaryMask(2, 2)};
      for (int k = 0; k < 4; ++k)
        for (int px = 0; px < 4; ++px) m[k].set(px / 2, px % 2, (code >> (4 * k + px)) & 1u);
      const double soft = sil_loss({m[0].to_tensor(), m[1].to_tensor(), m[2].to_tensor(), m[3].to_tensor()}, 0.0).item();
      if (soft != binary_inconsistency(m[0], m[2], m[1], m[3])) ++mismatches;
    }
    record("soft SIL equals binary inconsistency on all 2x2 quartets", mismatches == 0,
           std::to_string(mismatches) + " mismatches");
  }
  {
    const double xs[] = {1, 2, 3, 4, 5}, ys[] = {2, 3, 4, 5, 6};
    const auto w = stats::welch_t_test(xs, ys);
    record("Welch t pinned example", std::abs(w.t + 1.0) < 1e-12 && std::abs(w.dof - 8.0) < 1e-9 &&
                                         std::abs(w.p_two_sided - 0.3466) < 1e-3,
           "t=" + g3(w.t) + " dof=" + g3(w.dof) + " p=" + g3(w.p_two_sided));
  }
  {
    const double xs[] = {1, 2}, ys[] = {3, 4};
    const auto m = stats::mann_whitney_u(xs, ys);
    record("Mann-Whitney exact example", m.u == 0.0 && std::abs(m.p_two_sided - 1.0 / 3.0) < 1e-12,
           "U=" + g3(m.u) + " p=" + g3(m.p_two_sided));
  }
  {
    const Suite suite = [&] {
      SuiteConfig cfg = SuiteConfig::defaults();
      cfg.in_distribution.n_images = 10;
      for (auto& e : cfg.ood) e.n_images = 1;
      return standard_suite(seed, cfg);
    }();
    const PerturbationSpec spec;
    bool ok = true;
    for (std::uint64_t s = 0; s < 8 && ok; ++s) {
      const auto p1 = sample(spec, derive_seed(seed, s)), p2 = sample(spec, derive_seed(seed, s));
      const Tensor& img = suite.train.samples[s % suite.train.samples.size()].image;
      ok = p1 == p2 && (apply_to_image(p1, img).data() == apply_to_image(p2, img).data()).all();
    }
    record("perturbation sampling and application are deterministic", ok, "");
  }
  {
    const auto checks = run_grad_check(seed, 2);
    bool ok = true;
    std::string detail;
    for (const auto& c : checks) {
      ok = ok && c.passed();
      detail += (detail.empty() ? "" : ", ") + c.name + "=" + g3(c.max_relative_error);
    }
    record("finite-difference gradients", ok, detail);
  }
  return out;
}

}  // namespace segc
