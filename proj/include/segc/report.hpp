#pragma once

#include "segc/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segc {

/// First line of every results.csv; bump the version when columns change.
inline constexpr const char* kResultsSchemaLine = "# segc-results v1";
inline constexpr const char* kResultsHeader = "regime,seed,environment,mean_iou";

struct ResultRow {
  std::string regime;
  std::uint64_t seed = 0;
  std::string environment;
  double mean_iou = 0.0;
  bool operator==(const ResultRow&) const = default;
};

/// Regimes none, vanilla, consistency first (unknown names after, sorted),
/// then seed, then environment with the in-distribution name first.
void sort_canonical(std::vector<ResultRow>& rows, const std::string& id_environment = "in_distribution");

/// Writes rows in the order given; mean_iou is printed with 17 significant digits.
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);
/// Throws std::runtime_error on a missing schema line, wrong header or malformed row.
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

struct CellSummary {
  std::string environment;
  std::string regime;
  std::vector<double> samples;  // one per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single seed
};

struct TableRow {
  std::string environment;
  bool in_distribution = false;
  std::vector<CellSummary> cells;  // one per regime, in Report::regimes order
  /// Consistency mean above the vanilla mean; rendered bold.
  bool consistency_marked = false;
  std::optional<double> welch_p;  // consistency vs vanilla
  bool consistency_starred = false;
};

struct MannWhitneyRow {
  std::string environment;  // an environment name or "ood_pooled"
  std::string regime_a;
  std::string regime_b;
  std::size_t n_a = 0, n_b = 0;
  double median_a = 0.0, median_b = 0.0;
  stats::MannWhitneyResult test;
};

struct Improvement {
  std::string regime;
  std::string environment;
  double percent = 0.0;  // 100 (mean_regime - mean_none) / mean_none
};

struct Report {
  std::vector<std::string> regimes;
  std::vector<std::string> environments;
  std::vector<TableRow> table;
  std::vector<MannWhitneyRow> mann_whitney;
  std::vector<Improvement> improvements;
  std::vector<std::string> warnings;
};

inline constexpr double kStarThreshold = 0.01;
inline constexpr const char* kPooledEnvironment = "ood_pooled";

Report build_report(std::vector<ResultRow> rows, const std::string& id_environment = "in_distribution");

/// table.csv, table.md, mann_whitney.csv, improvement.csv, improvement.svg
void write_report(const Report& report, const std::filesystem::path& dir);

std::string render_table_markdown(const Report& report);
std::string render_improvement_svg(const Report& report);

}  // namespace segc
