#pragma once

#include <span>

namespace segc::stats {

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
};

/// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of freedom.
/// Needs >= 2 values per sample and nonzero variance in at least one of them.
WelchResult welch_t_test(std::span<const double> xs, std::span<const double> ys);

enum class MannWhitneyMethod { exact, normal_approximation };

struct MannWhitneyResult {
  double u = 0.0;  // min(U_x, U_y)
  double p_two_sided = 1.0;
  MannWhitneyMethod method = MannWhitneyMethod::exact;
};

/// Midrank U statistic. Exact null distribution when n_x + n_y <= 12 and there
/// are no ties, otherwise the normal approximation with tie and continuity
/// corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys);
/// Forces the normal approximation regardless of sample size.
MannWhitneyResult mann_whitney_u_normal(std::span<const double> xs, std::span<const double> ys);

/// Regularised incomplete beta I_x(a, b), continued fraction to 1e-10.
double incomplete_beta(double a, double b, double x);
/// Two-sided tail probability of Student's t.
double student_t_two_sided(double t, double dof);
double normal_cdf(double z);

}  // namespace segc::stats
