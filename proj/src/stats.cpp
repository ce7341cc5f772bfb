#include "sstories/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "sstories/errors.hpp"

namespace sstories::stats {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kBetaTolerance) return h;
  }
  throw Error("incomplete beta: continued fraction did not converge");
}

// Regularized lower incomplete gamma P(a, x).
double incomplete_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return clamp01(front * beta_continued_fraction(a, b, x) / a);
  return clamp01(1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw InvalidInput("t distribution: df must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double f_upper_tail(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw InvalidInput("F distribution: df must be positive");
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("normal quantile: p must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InvalidInput("sample variance needs at least two samples");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

StatResult anova_one_way(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InvalidInput("ANOVA needs at least two groups");
  std::size_t total_n = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InvalidInput("ANOVA needs at least two samples per group");
    total_n += g.size();
    for (double x : g) grand_sum += x;
  }
  const double grand_mean = grand_sum / static_cast<double>(total_n);
  double ssb = 0.0;
  double ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
    for (double x : g) ssw += (x - m) * (x - m);
  }
  const double df_between = static_cast<double>(groups.size() - 1);
  const double df_within = static_cast<double>(total_n - groups.size());
  StatResult r;
  r.df1 = df_between;
  r.df2 = df_within;
  r.n = total_n;
  if (ssw == 0.0) {
    if (ssb == 0.0) throw InvalidInput("ANOVA: all samples are identical");
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (ssb / df_between) / (ssw / df_within);
  r.p_value = f_upper_tail(r.statistic, df_between, df_within);
  return r;
}

StatResult t_test_one_sample(std::span<const double> samples, double mu0) {
  if (samples.size() < 2) throw InvalidInput("t-test needs at least two samples");
  const double var = sample_variance(samples);
  if (var == 0.0) throw InvalidInput("t-test: sample variance is zero");
  const double n = static_cast<double>(samples.size());
  StatResult r;
  r.statistic = (mean(samples) - mu0) / std::sqrt(var / n);
  r.df1 = n - 1.0;
  r.n = samples.size();
  r.p_value = student_t_two_sided_p(r.statistic, r.df1);
  return r;
}

StatResult t_test_pooled(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("t-test needs at least two samples per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
  if (pooled == 0.0) throw InvalidInput("t-test: pooled variance is zero");
  StatResult r;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.df1 = na + nb - 2.0;
  r.n = a.size() + b.size();
  r.p_value = student_t_two_sided_p(r.statistic, r.df1);
  return r;
}

std::pair<double, double> normal_ci(std::span<const double> samples, double level, IntervalKind kind) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0, 1)");
  if (samples.size() < 2) throw InvalidInput("confidence interval needs at least two samples");
  const double m = mean(samples);
  const double s = std::sqrt(sample_variance(samples));
  const double z = normal_quantile((1.0 + level) / 2.0);
  const double half =
      kind == IntervalKind::kMean ? z * s / std::sqrt(static_cast<double>(samples.size())) : z * s;
  return {m - half, m + half};
}

StatResult chi_square_uniform(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw InvalidInput("chi-square needs at least two bins");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) throw InvalidInput("chi-square: no observations");
  const double expected = total / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    chi2 += diff * diff / expected;
  }
  StatResult r;
  r.statistic = chi2;
  r.df1 = static_cast<double>(counts.size() - 1);
  r.n = static_cast<std::size_t>(total);
  r.p_value = clamp01(1.0 - incomplete_gamma_p(r.df1 / 2.0, chi2 / 2.0));
  return r;
}

}  // namespace sstories::stats
