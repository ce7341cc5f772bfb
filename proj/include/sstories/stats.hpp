#pragma once
// Hypothesis tests and interval estimates used by the judge harness and the
// `compare` command. Distribution tails come from one regularized incomplete
// beta routine; there is no external statistics dependency.

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sstories::stats {

struct StatResult {
  double statistic = 0.0;
  double df1 = 0.0;
  std::optional<double> df2;  // set for F tests
  double p_value = 1.0;
  std::size_t n = 0;
};

// Continued-fraction settings for the incomplete beta function.
inline constexpr double kBetaTolerance = 1e-10;
inline constexpr int kBetaMaxIterations = 300;

// I_x(a, b) for a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);
// Upper tail P(F > f) for the F distribution.
double f_upper_tail(double f, double df1, double df2);
// Standard normal CDF.
double normal_cdf(double z);
// Inverse standard normal CDF (Wichura's AS241, relative error ~1e-16).
double normal_quantile(double p);

double mean(std::span<const double> xs);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> xs);

StatResult anova_one_way(const std::vector<std::vector<double>>& groups);
StatResult t_test_one_sample(std::span<const double> samples, double mu0);
// Equal-variance two-sample t-test; its square equals the two-group ANOVA F.
StatResult t_test_pooled(std::span<const double> a, std::span<const double> b);

enum class IntervalKind {
  kMean,          // mean +- z * s / sqrt(n)
  kDistribution,  // mean +- z * s
};

std::pair<double, double> normal_ci(std::span<const double> samples, double level,
                                    IntervalKind kind = IntervalKind::kMean);

// Pearson chi-square statistic against uniform expected counts, with its
// upper-tail p-value (df = bins - 1).
StatResult chi_square_uniform(std::span<const std::size_t> counts);

}  // namespace sstories::stats
