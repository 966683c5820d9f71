#pragma once

#include "segc/report.hpp"
#include "segc/synthgen.hpp"
#include "segc/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace segc {

/// Raised for bad flags or configuration; the CLI maps it to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Config document: {"seed": n, "suite": {...}, "train": {...}}, all keys optional.
struct AppConfig {
  std::optional<std::uint64_t> seed;
  SuiteConfig suite = SuiteConfig::defaults();
  nlohmann::json train_overrides = nlohmann::json::object();
};

/// Throws UsageError when the file is missing or malformed.
AppConfig load_app_config(const std::filesystem::path& path);

/// "desk" or "paper"; throws UsageError otherwise.
TrainConfig preset_config(const std::string& name);

std::vector<Regime> parse_regime_list(const std::string& csv);

struct ExperimentOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::vector<Regime> regimes{Regime::none, Regime::vanilla, Regime::consistency};
  int seeds = 10;
  std::uint64_t first_seed = 0;
  std::string preset = "desk";
  nlohmann::json train_overrides = nlohmann::json::object();
  int jobs = 1;
};

struct ExperimentOutcome {
  std::vector<ResultRow> rows;  // canonical order
  int failed_runs = 0;
};

/// Trains every (regime, seed) pair on the suite stored in data_dir and writes
/// runs/<regime>_seed<k>/{history.csv,model.bin,summary.json} plus results.csv.
/// A failing run is logged and skipped; the others still complete.
ExperimentOutcome run_experiment(const ExperimentOptions& options, std::ostream& log);

/// Resolved training config for one run (preset, then overrides, then regime and seed).
TrainConfig resolve_train_config(const ExperimentOptions& options, Regime regime, std::uint64_t seed);

/// Evaluates a model on the ID test split and every OOD environment.
std::vector<ResultRow> evaluate_run(const TinySegNet& model, const Suite& suite, const std::string& id_environment,
                                    Regime regime, std::uint64_t seed);

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast internal checks of the core contracts; used by the selftest command.
std::vector<SelftestResult> run_selftest(std::uint64_t seed);

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_relative_error < tolerance; }
};

/// Central-difference checks of the losses and of the model loss on a small image.
std::vector<GradCheckResult> run_grad_check(std::uint64_t seed, int trials);

}  // namespace segc
