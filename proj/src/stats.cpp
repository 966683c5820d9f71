#include "segc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace segc::stats {

namespace {

constexpr double kTolerance = 1e-10;
constexpr int kMaxIterations = 500;

double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double m) {
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kTolerance) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_sided: dof must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

WelchResult welch_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("welch_t_test: each sample needs >= 2 values");
  const double mx = mean(xs), my = mean(ys);
  const double vx = sample_variance(xs, mx) / static_cast<double>(xs.size());
  const double vy = sample_variance(ys, my) / static_cast<double>(ys.size());
  if (vx == 0.0 && vy == 0.0) throw std::domain_error("welch_t_test: both samples have zero variance");
  WelchResult r;
  r.t = (mx - my) / std::sqrt(vx + vy);
  r.dof = (vx + vy) * (vx + vy) /
          (vx * vx / static_cast<double>(xs.size() - 1) + vy * vy / static_cast<double>(ys.size() - 1));
  r.p_two_sided = std::min(1.0, student_t_two_sided(r.t, r.dof));
  return r;
}

namespace {

struct Ranking {
  double rank_sum_x = 0.0;
  double tie_term = 0.0;  // sum over tie groups of t^3 - t
  bool has_ties = false;
};

Ranking rank(std::span<const double> xs, std::span<const double> ys) {
  std::vector<std::pair<double, bool>> all;
  all.reserve(xs.size() + ys.size());
  for (double x : xs) all.emplace_back(x, true);
  for (double y : ys) all.emplace_back(y, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Ranking r;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) r.rank_sum_x += midrank;
    }
    const double t = static_cast<double>(j - i);
    if (j - i > 1) {
      r.has_ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j;
  }
  return r;
}

// Number of ways to obtain each U value under H0, by dynamic programming over
// (items placed, items from x, U). Exact for tie-free data.
std::vector<double> u_distribution(std::size_t nx, std::size_t ny) {
  const std::size_t max_u = nx * ny;
  // ways[i][u]: sequences using i x-items and j y-items; build over j.
  std::vector<std::vector<double>> ways(nx + 1, std::vector<double>(max_u + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      if (i == 0 && j == 0) continue;
      std::vector<double> next(max_u + 1, 0.0);
      // Last item is an x (contributes j to U) or a y (contributes 0).
      if (i > 0) {
        for (std::size_t u = j; u <= max_u; ++u) next[u] += ways[i - 1][u - j];
      }
      if (j > 0) {
        for (std::size_t u = 0; u <= max_u; ++u) next[u] += ways[i][u];
      }
      ways[i] = std::move(next);
    }
  }
  return ways[nx];
}

MannWhitneyResult finish(std::span<const double> xs, std::span<const double> ys, bool exact) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const auto nx = static_cast<double>(xs.size());
  const auto ny = static_cast<double>(ys.size());
  const Ranking r = rank(xs, ys);
  const double ux = r.rank_sum_x - nx * (nx + 1.0) / 2.0;
  const double uy = nx * ny - ux;
  MannWhitneyResult out;
  out.u = std::min(ux, uy);

  if (exact && !r.has_ties && xs.size() + ys.size() <= 12) {
    out.method = MannWhitneyMethod::exact;
    const std::vector<double> ways = u_distribution(xs.size(), ys.size());
    const double total = std::accumulate(ways.begin(), ways.end(), 0.0);
    // U is integral without ties; count the lower tail at min(U).
    const auto u = static_cast<std::size_t>(std::llround(out.u));
    double lower = 0.0;
    for (std::size_t k = 0; k <= u; ++k) lower += ways[k];
    out.p_two_sided = std::min(1.0, 2.0 * lower / total);
    return out;
  }

  out.method = MannWhitneyMethod::normal_approximation;
  const double n = nx + ny;
  const double mu = nx * ny / 2.0;
  const double var = nx * ny / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    out.p_two_sided = 1.0;
    return out;
  }
  const double z = (std::abs(ux - mu) - 0.5) / std::sqrt(var);
  out.p_two_sided = z <= 0.0 ? 1.0 : std::min(1.0, 2.0 * normal_cdf(-z));
  return out;
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys) {
  return finish(xs, ys, true);
}

MannWhitneyResult mann_whitney_u_normal(std::span<const double> xs, std::span<const double> ys) {
  return finish(xs, ys, false);
}

}  // namespace segc::stats
