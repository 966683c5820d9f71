#include "segc/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace segc {

namespace {

int regime_rank(const std::string& r) {
  if (r == "none") return 0;
  if (r == "vanilla") return 1;
  if (r == "consistency") return 2;
  return 3;
}

bool regime_less(const std::string& a, const std::string& b) {
  const int ra = regime_rank(a), rb = regime_rank(b);
  return ra != rb ? ra < rb : a < b;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what, int line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("results.csv line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
  return value;
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v, double m) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

void sort_canonical(std::vector<ResultRow>& rows, const std::string& id_environment) {
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    if (a.regime != b.regime) return regime_less(a.regime, b.regime);
    if (a.seed != b.seed) return a.seed < b.seed;
    const bool ida = a.environment == id_environment, idb = b.environment == id_environment;
    if (ida != idb) return ida;
    return a.environment < b.environment;
  });
}

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  std::ostringstream os;
  os << kResultsSchemaLine << '\n' << kResultsHeader << '\n';
  for (const auto& r : rows) {
    if (r.regime.find(',') != std::string::npos || r.environment.find(',') != std::string::npos) {
      throw std::invalid_argument("results.csv: names must not contain commas");
    }
    os << r.regime << ',' << r.seed << ',' << r.environment << ',' << fmt("%.17g", r.mean_iou) << '\n';
  }
  write_file(path, os.str());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kResultsSchemaLine) {
    throw std::runtime_error("results.csv: expected schema line '" + std::string(kResultsSchemaLine) + "'");
  }
  if (!std::getline(is, line) || line != kResultsHeader) {
    throw std::runtime_error("results.csv: expected header '" + std::string(kResultsHeader) + "'");
  }
  std::vector<ResultRow> rows;
  int lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4 || f[0].empty() || f[2].empty()) {
      throw std::runtime_error("results.csv line " + std::to_string(lineno) + ": expected 4 fields");
    }
    rows.push_back({f[0], parse_number<std::uint64_t>(f[1], "seed", lineno), f[2],
                    parse_number<double>(f[3], "mean_iou", lineno)});
  }
  return rows;
}

Report build_report(std::vector<ResultRow> rows, const std::string& id_environment) {
  sort_canonical(rows, id_environment);
  Report rep;
  std::map<std::pair<std::string, std::string>, std::vector<double>> samples;  // (env, regime)
  for (const auto& r : rows) {
    if (std::find(rep.regimes.begin(), rep.regimes.end(), r.regime) == rep.regimes.end()) rep.regimes.push_back(r.regime);
    if (std::find(rep.environments.begin(), rep.environments.end(), r.environment) == rep.environments.end()) {
      rep.environments.push_back(r.environment);
    }
    samples[{r.environment, r.regime}].push_back(r.mean_iou);
  }
  std::stable_sort(rep.environments.begin(), rep.environments.end(), [&](const std::string& a, const std::string& b) {
    const bool ida = a == id_environment, idb = b == id_environment;
    return ida != idb ? ida : a < b;
  });

  const auto cell = [&](const std::string& env, const std::string& regime) -> const std::vector<double>* {
    const auto it = samples.find({env, regime});
    return it == samples.end() ? nullptr : &it->second;
  };

  bool stats_ok = true;
  for (const auto& [key, v] : samples) {
    if (v.size() < 2) {
      rep.warnings.push_back("fewer than 2 seeds for " + key.second + " on " + key.first + "; statistics skipped");
      stats_ok = false;
    }
  }

  const bool has_vanilla = std::count(rep.regimes.begin(), rep.regimes.end(), "vanilla") > 0;
  const bool has_consistency = std::count(rep.regimes.begin(), rep.regimes.end(), "consistency") > 0;
  for (const auto& env : rep.environments) {
    TableRow row;
    row.environment = env;
    row.in_distribution = env == id_environment;
    for (const auto& regime : rep.regimes) {
      CellSummary c;
      c.environment = env;
      c.regime = regime;
      if (const auto* v = cell(env, regime)) c.samples = *v;
      c.mean = mean_of(c.samples);
      c.stddev = stddev_of(c.samples, c.mean);
      row.cells.push_back(std::move(c));
    }
    const auto* van = cell(env, "vanilla");
    const auto* con = cell(env, "consistency");
    if (has_vanilla && has_consistency && van && con) {
      row.consistency_marked = mean_of(*con) > mean_of(*van);
      if (stats_ok) {
        try {
          row.welch_p = stats::welch_t_test(*con, *van).p_two_sided;
          row.consistency_starred = row.consistency_marked && *row.welch_p < kStarThreshold;
        } catch (const std::domain_error&) {
          rep.warnings.push_back("zero variance in both consistency and vanilla on " + env + "; t-test skipped");
        }
      }
    }
    rep.table.push_back(std::move(row));
  }

  if (stats_ok) {
    std::vector<std::string> groups = rep.environments;
    const bool any_ood = std::any_of(rep.environments.begin(), rep.environments.end(),
                                     [&](const std::string& e) { return e != id_environment; });
    if (any_ood) groups.push_back(kPooledEnvironment);
    for (const auto& group : groups) {
      for (std::size_t j = 1; j < rep.regimes.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
          // Later regime first, so "consistency vs none" reads naturally.
          const std::string& a = rep.regimes[j];
          const std::string& b = rep.regimes[i];
          std::vector<double> xa, xb;
          for (const auto& env : rep.environments) {
            if (group == kPooledEnvironment ? env == id_environment : env != group) continue;
            if (const auto* v = cell(env, a)) xa.insert(xa.end(), v->begin(), v->end());
            if (const auto* v = cell(env, b)) xb.insert(xb.end(), v->begin(), v->end());
          }
          if (xa.empty() || xb.empty()) continue;
          MannWhitneyRow mw;
          mw.environment = group;
          mw.regime_a = a;
          mw.regime_b = b;
          mw.n_a = xa.size();
          mw.n_b = xb.size();
          mw.median_a = median_of(xa);
          mw.median_b = median_of(xb);
          mw.test = stats::mann_whitney_u(xa, xb);
          rep.mann_whitney.push_back(mw);
        }
      }
    }
  }

  if (std::count(rep.regimes.begin(), rep.regimes.end(), "none") > 0) {
    for (const auto& regime : rep.regimes) {
      if (regime == "none") continue;
      for (const auto& env : rep.environments) {
        const auto* base = cell(env, "none");
        const auto* v = cell(env, regime);
        if (!base || !v) continue;
        const double m0 = mean_of(*base);
        if (m0 == 0.0) {
          rep.warnings.push_back("no-augmentation mean is 0 on " + env + "; improvement undefined");
          continue;
        }
        rep.improvements.push_back({regime, env, 100.0 * (mean_of(*v) - m0) / m0});
      }
    }
  } else {
    rep.warnings.push_back("no 'none' regime in results; improvement percentages skipped");
  }
  return rep;
}

std::string render_table_markdown(const Report& rep) {
  std::ostringstream os;
  os << "Mean IoU per training regime. Consistency entries above vanilla augmentation are bold;\n"
     << "a '*' marks a two-sided Welch t-test p < " << kStarThreshold << " against vanilla.\n\n";
  os << "| Model |";
  for (const auto& r : rep.regimes) os << ' ' << r << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < rep.regimes.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& row : rep.table) {
    os << "| **" << row.environment << (row.in_distribution ? " (in-distribution)" : " (out-of-distribution)")
       << "** |";
    for (std::size_t i = 0; i < rep.regimes.size(); ++i) os << " |";
    os << "\n| TinySegNet |";
    for (const auto& c : row.cells) {
      std::string v = c.samples.empty() ? "n/a" : fmt("%.3f", c.mean);
      if (c.regime == "consistency" && row.consistency_marked) v = "**" + v + "**";
      if (c.regime == "consistency" && row.consistency_starred) v += '*';
      os << ' ' << v << " |";
    }
    os << '\n';
  }
  if (!rep.mann_whitney.empty()) {
    os << "\nMann-Whitney U tests (two-sided)\n\n| Environment | A | B | n_A | n_B | median A | median B | U | p | method |\n"
       << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& m : rep.mann_whitney) {
      os << "| " << m.environment << " | " << m.regime_a << " | " << m.regime_b << " | " << m.n_a << " | " << m.n_b
         << " | " << fmt("%.3f", m.median_a) << " | " << fmt("%.3f", m.median_b) << " | " << fmt("%.1f", m.test.u)
         << " | " << fmt("%.4g", m.test.p_two_sided) << " | "
         << (m.test.method == stats::MannWhitneyMethod::exact ? "exact" : "normal") << " |\n";
    }
  }
  if (!rep.improvements.empty()) {
    os << "\nImprovement over no augmentation, percent of the no-augmentation mean\n\n| Regime | Environment | % |\n"
       << "|---|---|---|\n";
    for (const auto& imp : rep.improvements) {
      os << "| " << imp.regime << " | " << imp.environment << " | " << fmt("%+.2f", imp.percent) << " |\n";
    }
  }
  for (const auto& w : rep.warnings) os << "\nwarning: " << w << '\n';
  return os.str();
}

std::string render_improvement_svg(const Report& rep) {
  constexpr double width = 720, height = 360, left = 60, right = 170, top = 30, bottom = 50;
  static constexpr const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
  std::vector<std::string> groups;
  for (const auto& r : rep.regimes)
    if (r != "none") groups.push_back(r);

  double extent = 10.0;
  for (const auto& imp : rep.improvements) extent = std::max(extent, std::abs(imp.percent));
  extent = 10.0 * std::ceil(extent / 10.0);
  const double plot_h = height - top - bottom, plot_w = width - left - right;
  const auto y_of = [&](double v) { return top + plot_h * (extent - v) / (2.0 * extent); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << ' ' << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">Mean IoU change relative to no augmentation (%)</text>\n";
  for (int k = -2; k <= 2; ++k) {
    const double v = extent * k / 2.0;
    const double y = y_of(v);
    os << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << fmt("%.2f", y) << "\" y2=\""
       << fmt("%.2f", y) << "\" stroke=\"" << (k == 0 ? "#000" : "#ddd") << "\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt("%.2f", y + 4) << "\" text-anchor=\"end\">" << fmt("%g", v)
       << "</text>\n";
  }
  const double group_w = groups.empty() ? plot_w : plot_w / static_cast<double>(groups.size());
  const double n_env = std::max<double>(1.0, static_cast<double>(rep.environments.size()));
  const double bar_w = 0.8 * group_w / n_env;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = left + group_w * static_cast<double>(g) + 0.1 * group_w;
    os << "<g id=\"" << groups[g] << "\">\n";
    for (std::size_t e = 0; e < rep.environments.size(); ++e) {
      const auto it = std::find_if(rep.improvements.begin(), rep.improvements.end(), [&](const Improvement& imp) {
        return imp.regime == groups[g] && imp.environment == rep.environments[e];
      });
      if (it == rep.improvements.end()) continue;
      const double y0 = y_of(0.0), y1 = y_of(it->percent);
      os << "<rect x=\"" << fmt("%.2f", gx + bar_w * static_cast<double>(e)) << "\" y=\"" << fmt("%.2f", std::min(y0, y1))
         << "\" width=\"" << fmt("%.2f", bar_w * 0.9) << "\" height=\"" << fmt("%.2f", std::abs(y1 - y0))
         << "\" fill=\"" << palette[e % 6] << "\"><title>" << groups[g] << ' ' << rep.environments[e] << ' '
         << fmt("%+.2f", it->percent) << "%</title></rect>\n";
    }
    os << "<text x=\"" << fmt("%.2f", left + group_w * (static_cast<double>(g) + 0.5)) << "\" y=\""
       << height - bottom + 20 << "\" text-anchor=\"middle\">" << groups[g] << "</text>\n</g>\n";
  }
  for (std::size_t e = 0; e < rep.environments.size(); ++e) {
    const double y = top + 18.0 * static_cast<double>(e);
    os << "<rect x=\"" << width - right + 15 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << palette[e % 6]
       << "\"/><text x=\"" << width - right + 32 << "\" y=\"" << y + 10 << "\">" << rep.environments[e] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_report(const Report& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::ostringstream table;
  table << "environment,model";
  for (const auto& r : rep.regimes) table << ',' << r << "_mean," << r << "_std," << r << "_n";
  table << ",consistency_marked,welch_p,consistency_starred\n";
  for (const auto& row : rep.table) {
    table << row.environment << ",TinySegNet";
    for (const auto& c : row.cells) table << ',' << fmt("%.6f", c.mean) << ',' << fmt("%.6f", c.stddev) << ',' << c.samples.size();
    table << ',' << (row.consistency_marked ? 1 : 0) << ',' << (row.welch_p ? fmt("%.6g", *row.welch_p) : "") << ','
          << (row.consistency_starred ? 1 : 0) << '\n';
  }
  write_file(dir / "table.csv", table.str());

  std::ostringstream mw;
  mw << "environment,regime_a,regime_b,n_a,n_b,median_a,median_b,u,p_two_sided,method\n";
  for (const auto& m : rep.mann_whitney) {
    mw << m.environment << ',' << m.regime_a << ',' << m.regime_b << ',' << m.n_a << ',' << m.n_b << ','
       << fmt("%.6f", m.median_a) << ',' << fmt("%.6f", m.median_b) << ',' << fmt("%.1f", m.test.u) << ','
       << fmt("%.6g", m.test.p_two_sided) << ',' << (m.test.method == stats::MannWhitneyMethod::exact ? "exact" : "normal")
       << '\n';
  }
  write_file(dir / "mann_whitney.csv", mw.str());

  std::ostringstream imp;
  imp << "regime,environment,improvement_percent\n";
  for (const auto& i : rep.improvements) imp << i.regime << ',' << i.environment << ',' << fmt("%.6f", i.percent) << '\n';
  write_file(dir / "improvement.csv", imp.str());

  write_file(dir / "table.md", render_table_markdown(rep));
  write_file(dir / "improvement.svg", render_improvement_svg(rep));
}

}  // namespace segc
