// segc: data generation, training matrix, report and self checks.

#include "segc/app.hpp"
#include "segc/dataset_io.hpp"
#include "segc/report.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit { kOk = 0, kPartial = 1, kUsage = 2 };

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
  int jobs = 1;
  std::string preset = "desk";
};

segc::AppConfig config_or_default(const Globals& g) {
  return g.config.empty() ? segc::AppConfig{} : segc::load_app_config(g.config);
}

std::uint64_t effective_seed(const Globals& g, const segc::AppConfig& cfg) {
  if (g.seed_set) return g.seed;
  return cfg.seed.value_or(0);
}

int cmd_gen_data(const Globals& g) {
  const segc::AppConfig cfg = config_or_default(g);
  const std::uint64_t seed = effective_seed(g, cfg);
  const std::filesystem::path out = g.out.empty() ? "data" : g.out;
  const segc::Suite suite = segc::standard_suite(seed, cfg.suite);
  segc::write_suite(out, suite, cfg.suite, seed);
  std::cout << "wrote " << suite.train.samples.size() + suite.val.samples.size() + suite.test_id.samples.size()
            << " in-distribution and ";
  std::size_t n_ood = 0;
  for (const auto& e : suite.ood) n_ood += e.samples.size();
  std::cout << n_ood << " out-of-distribution samples to " << out.string() << '\n';
  return kOk;
}

int cmd_experiment(const Globals& g, const std::string& data, const std::string& regimes, int seeds) {
  const segc::AppConfig cfg = config_or_default(g);
  segc::ExperimentOptions opt;
  opt.data_dir = data;
  opt.out_dir = g.out.empty() ? "results" : g.out;
  opt.regimes = segc::parse_regime_list(regimes);
  opt.seeds = seeds;
  opt.first_seed = effective_seed(g, cfg);
  opt.preset = g.preset;
  opt.train_overrides = cfg.train_overrides;
  opt.jobs = g.jobs;
  const segc::ExperimentOutcome outcome = segc::run_experiment(opt, std::cerr);
  std::cout << "wrote " << outcome.rows.size() << " rows to " << (opt.out_dir / "results.csv").string() << '\n';
  if (outcome.failed_runs > 0) {
    std::cerr << outcome.failed_runs << " run(s) failed\n";
    return kPartial;
  }
  return kOk;
}

int cmd_report(const Globals& g, const std::string& results, const std::string& id_env) {
  const std::filesystem::path out = g.out.empty() ? "report" : g.out;
  const segc::Report rep = segc::build_report(segc::read_results_csv(results), id_env);
  segc::write_report(rep, out);
  std::cout << segc::render_table_markdown(rep);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return kOk;
}

int cmd_grad_check(const Globals& g, int trials) {
  bool ok = true;
  for (const auto& r : segc::run_grad_check(g.seed, trials)) {
    std::cout << (r.passed() ? "ok   " : "FAIL ") << r.name << ": max rel. error " << r.max_relative_error
              << " (tol " << r.tolerance << ")\n";
    ok = ok && r.passed();
  }
  return ok ? kOk : kPartial;
}

int cmd_selftest(const Globals& g) {
  bool ok = true;
  for (const auto& r : segc::run_selftest(g.seed)) {
    std::cout << (r.passed ? "ok   " : "FAIL ") << r.name;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ')';
    std::cout << '\n';
    ok = ok && r.passed;
  }
  return ok ? kOk : kPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistency training toolkit for binary segmentation"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Base seed (data seed for gen-data, first run seed for experiment)");
  app.add_option("--config", g.config, "JSON config file with optional 'seed', 'suite' and 'train' sections");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Parallel training runs")->check(CLI::PositiveNumber);
  app.add_option("--preset", g.preset, "Training preset")->check(CLI::IsMember({"desk", "paper"}));

  auto* gen = app.add_subcommand("gen-data", "Render the synthetic suite (pixmaps + manifest.json)");

  auto* exp = app.add_subcommand("experiment", "Train the regime x seed matrix and write results.csv");
  std::string data_dir = "data", regimes = "none,vanilla,consistency";
  int seeds = 10;
  exp->add_option("--data", data_dir, "Directory written by gen-data");
  exp->add_option("--regimes", regimes, "Comma-separated subset of none,vanilla,consistency");
  exp->add_option("--seeds", seeds, "Number of seeds per regime")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Tables, significance tests and improvement chart from results.csv");
  std::string results = "results/results.csv", id_env = "in_distribution";
  rep->add_option("--results", results, "results.csv written by experiment");
  rep->add_option("--id-env", id_env, "Name of the in-distribution environment");

  auto* grad = app.add_subcommand("grad-check", "Finite-difference checks of the losses and the model");
  int trials = 10;
  grad->add_option("--trials", trials, "Random cases per check")->check(CLI::PositiveNumber);

  auto* self = app.add_subcommand("selftest", "Quick internal consistency checks");

  // Global flags are accepted after the subcommand too.
  for (auto* sub : {gen, exp, rep, grad, self}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*gen) return cmd_gen_data(g);
    if (*exp) return cmd_experiment(g, data_dir, regimes, seeds);
    if (*rep) return cmd_report(g, results, id_env);
    if (*grad) return cmd_grad_check(g, trials);
    if (*self) return cmd_selftest(g);
  } catch (const segc::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kUsage;
}
