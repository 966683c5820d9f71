#include "segc/report.hpp"
#include "segc/stats.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace segc {
namespace {

const std::vector<std::string> kEnvs{"in_distribution", "ood_a", "ood_b"};

// Rows for three regimes over `seeds` seeds with a per-regime offset.
std::vector<ResultRow> grid(int seeds) {
  std::vector<ResultRow> rows;
  const std::vector<std::pair<std::string, double>> regimes{{"consistency", 0.70}, {"none", 0.50}, {"vanilla", 0.60}};
  for (const auto& [regime, base] : regimes)
    for (int s = seeds - 1; s >= 0; --s)
      for (std::size_t e = 0; e < kEnvs.size(); ++e)
        rows.push_back({regime, static_cast<std::uint64_t>(s), kEnvs[e], base - 0.05 * e + 0.01 * s});
  return rows;
}

const TableRow& row_for(const Report& r, const std::string& env) {
  for (const auto& row : r.table)
    if (row.environment == env) return row;
  throw std::out_of_range(env);
}

TEST(Results, CsvRoundTripIsExact) {
  const auto dir = testing::scratch_dir("results_csv");
  std::vector<ResultRow> rows = grid(3);
  rows[0].mean_iou = 0.1 + 0.2;  // needs all 17 digits
  write_results_csv(dir / "r.csv", rows);
  EXPECT_EQ(read_results_csv(dir / "r.csv"), rows);
  EXPECT_EQ(testing::slurp(dir / "r.csv").substr(0, 17), "# segc-results v1");
}

TEST(Results, MalformedFilesThrow) {
  const auto dir = testing::scratch_dir("results_bad");
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  EXPECT_THROW(read_results_csv(dir / "missing.csv"), std::runtime_error);
  EXPECT_THROW(read_results_csv(write("a.csv", "regime,seed,environment,mean_iou\n")), std::runtime_error);
  EXPECT_THROW(read_results_csv(write("b.csv", "# segc-results v1\nregime,seed,env,iou\n")), std::runtime_error);
  const std::string head = "# segc-results v1\nregime,seed,environment,mean_iou\n";
  EXPECT_THROW(read_results_csv(write("c.csv", head + "none,1,in_distribution\n")), std::runtime_error);
  EXPECT_THROW(read_results_csv(write("d.csv", head + "none,x,in_distribution,0.5\n")), std::runtime_error);
  EXPECT_THROW(read_results_csv(write("e.csv", head + "none,1,in_distribution,0.5x\n")), std::runtime_error);
  EXPECT_EQ(read_results_csv(write("f.csv", head)).size(), 0u);
  const std::vector<ResultRow> comma{{"a,b", 0, "e", 0.5}};
  EXPECT_THROW(write_results_csv(dir / "g.csv", comma), std::invalid_argument);
}

TEST(Results, CanonicalOrder) {
  std::vector<ResultRow> rows{{"zeta", 0, "b", 0},       {"consistency", 1, "in_distribution", 0},
                              {"none", 1, "a", 0},       {"none", 0, "b", 0},
                              {"vanilla", 0, "a", 0},    {"none", 0, "in_distribution", 0},
                              {"alpha", 0, "a", 0}};
  sort_canonical(rows);
  const std::vector<std::pair<std::string, std::string>> want{
      {"none", "in_distribution"}, {"none", "b"}, {"none", "a"}, {"vanilla", "a"},
      {"consistency", "in_distribution"}, {"alpha", "a"}, {"zeta", "b"}};
  ASSERT_EQ(rows.size(), want.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].regime, want[i].first) << i;
    EXPECT_EQ(rows[i].environment, want[i].second) << i;
  }
  EXPECT_EQ(rows[1].seed, 0u);
  EXPECT_EQ(rows[2].seed, 1u);
}

TEST(Report, HandBuiltCells) {
  const Report r = build_report(grid(3));
  EXPECT_EQ(r.regimes, (std::vector<std::string>{"none", "vanilla", "consistency"}));
  EXPECT_EQ(r.environments, kEnvs);
  EXPECT_TRUE(r.warnings.empty());
  const TableRow& id = row_for(r, "in_distribution");
  EXPECT_TRUE(id.in_distribution);
  ASSERT_EQ(id.cells.size(), 3u);
  // none on ID: 0.50, 0.51, 0.52 in seed order.
  EXPECT_EQ(id.cells[0].samples, (std::vector<double>{0.50, 0.51, 0.52}));
  EXPECT_NEAR(id.cells[0].mean, 0.51, 1e-12);
  EXPECT_NEAR(id.cells[0].stddev, 0.01, 1e-12);
  EXPECT_NEAR(row_for(r, "ood_b").cells[2].mean, 0.61, 1e-12);
  EXPECT_FALSE(row_for(r, "ood_a").in_distribution);
}

TEST(Report, MarkingAndStars) {
  std::vector<ResultRow> rows;
  const std::vector<double> con{0.80, 0.82, 0.81, 0.83, 0.79}, van{0.70, 0.71, 0.69, 0.72, 0.70};
  for (std::uint64_t s = 0; s < 5; ++s) {
    rows.push_back({"vanilla", s, "in_distribution", van[s]});
    rows.push_back({"consistency", s, "in_distribution", con[s]});
    // On the shifted environment consistency is worse, so neither mark applies.
    rows.push_back({"vanilla", s, "ood", con[s]});
    rows.push_back({"consistency", s, "ood", van[s]});
  }
  const Report r = build_report(rows);
  const TableRow& id = row_for(r, "in_distribution");
  EXPECT_TRUE(id.consistency_marked);
  ASSERT_TRUE(id.welch_p.has_value());
  EXPECT_NEAR(*id.welch_p, stats::welch_t_test(con, van).p_two_sided, 1e-15);
  EXPECT_TRUE(id.consistency_starred);
  const TableRow& ood = row_for(r, "ood");
  EXPECT_FALSE(ood.consistency_marked);
  EXPECT_FALSE(ood.consistency_starred);
  const std::string md = render_table_markdown(r);
  EXPECT_NE(md.find("**0.810***"), std::string::npos) << md;
  EXPECT_NE(md.find(" 0.704 |"), std::string::npos) << md;
}

TEST(Report, MarkedButNotStarredWhenNotSignificant) {
  std::vector<ResultRow> rows;
  const std::vector<double> con{0.71, 0.60, 0.80}, van{0.70, 0.62, 0.75};
  for (std::uint64_t s = 0; s < 3; ++s) {
    rows.push_back({"vanilla", s, "in_distribution", van[s]});
    rows.push_back({"consistency", s, "in_distribution", con[s]});
  }
  const TableRow& id = row_for(build_report(rows), "in_distribution");
  EXPECT_TRUE(id.consistency_marked);
  EXPECT_FALSE(id.consistency_starred);
}

TEST(Report, IdenticalSamplesGetNoStar) {
  std::vector<ResultRow> rows;
  for (std::uint64_t s = 0; s < 4; ++s) {
    rows.push_back({"vanilla", s, "in_distribution", 0.5});
    rows.push_back({"consistency", s, "in_distribution", 0.5});
  }
  const Report r = build_report(rows);
  const TableRow& id = row_for(r, "in_distribution");
  EXPECT_FALSE(id.consistency_marked);
  EXPECT_FALSE(id.consistency_starred);
  EXPECT_FALSE(id.welch_p.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Report, ImprovementPercent) {
  const Report r = build_report(grid(3));
  // 2 regimes x 3 environments.
  ASSERT_EQ(r.improvements.size(), 6u);
  for (const Improvement& imp : r.improvements) {
    const TableRow& row = row_for(r, imp.environment);
    const double m0 = row.cells[0].mean;
    const double m = imp.regime == "vanilla" ? row.cells[1].mean : row.cells[2].mean;
    EXPECT_NEAR(imp.percent, 100.0 * (m - m0) / m0, 1e-12);
  }
  // consistency on ID: (0.71 - 0.51) / 0.51.
  const auto it = std::find_if(r.improvements.begin(), r.improvements.end(), [](const Improvement& i) {
    return i.regime == "consistency" && i.environment == "in_distribution";
  });
  ASSERT_NE(it, r.improvements.end());
  EXPECT_NEAR(it->percent, 100.0 * 0.20 / 0.51, 1e-10);
}

TEST(Report, NoBaselineWarns) {
  std::vector<ResultRow> rows = grid(2);
  std::erase_if(rows, [](const ResultRow& r) { return r.regime == "none"; });
  const Report r = build_report(rows);
  EXPECT_TRUE(r.improvements.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Report, SingleSeedSkipsStatistics) {
  const Report r = build_report(grid(1));
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_TRUE(r.mann_whitney.empty());
  for (const auto& row : r.table) EXPECT_FALSE(row.welch_p.has_value());
  for (const auto& row : r.table)
    for (const auto& c : row.cells) EXPECT_EQ(c.stddev, 0.0);
  EXPECT_EQ(r.improvements.size(), 6u);
}

TEST(Report, MannWhitneyRowsIncludePooledOod) {
  const Report r = build_report(grid(3));
  // 3 environments + pooled, 3 regime pairs each.
  ASSERT_EQ(r.mann_whitney.size(), 12u);
  const auto pooled = std::find_if(r.mann_whitney.begin(), r.mann_whitney.end(), [](const MannWhitneyRow& m) {
    return m.environment == kPooledEnvironment && m.regime_a == "consistency" && m.regime_b == "none";
  });
  ASSERT_NE(pooled, r.mann_whitney.end());
  EXPECT_EQ(pooled->n_a, 6u);
  EXPECT_EQ(pooled->n_b, 6u);
  std::vector<double> xa, xb;
  for (const auto& env : {"ood_a", "ood_b"}) {
    for (double v : row_for(r, env).cells[2].samples) xa.push_back(v);
    for (double v : row_for(r, env).cells[0].samples) xb.push_back(v);
  }
  const stats::MannWhitneyResult want = stats::mann_whitney_u(xa, xb);
  EXPECT_EQ(pooled->test.u, want.u);
  EXPECT_EQ(pooled->test.p_two_sided, want.p_two_sided);
  EXPECT_GT(pooled->median_a, pooled->median_b);
}

TEST(Report, SvgHasOneGroupPerNonBaselineRegime) {
  const Report r = build_report(grid(2));
  const std::string svg = render_improvement_svg(r);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<g id=\"vanilla\">"), std::string::npos);
  EXPECT_NE(svg.find("<g id=\"consistency\">"), std::string::npos);
  EXPECT_EQ(svg.find("<g id=\"none\">"), std::string::npos);
  std::size_t bars = 0;
  for (std::size_t pos = 0; (pos = svg.find("<title>", pos)) != std::string::npos; ++pos) ++bars;
  EXPECT_EQ(bars, 6u);
}

TEST(Report, WritesAllArtifacts) {
  const auto dir = testing::scratch_dir("report_out");
  write_report(build_report(grid(3)), dir);
  for (const char* f : {"table.csv", "table.md", "mann_whitney.csv", "improvement.csv", "improvement.svg"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const std::string table = testing::slurp(dir / "table.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "environment,model,none_mean,none_std,none_n,vanilla_mean,vanilla_std,vanilla_n,consistency_mean,"
            "consistency_std,consistency_n,consistency_marked,welch_p,consistency_starred");
}

}  // namespace
}  // namespace segc
