#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>

namespace envicp::stats {

/// Probability in [0, 1]. Construction clamps; NaN maps to 1.
class PValue {
 public:
  constexpr PValue() = default;
  constexpr explicit PValue(double v) : value_(v != v ? 1.0 : (v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v))) {}

  constexpr double value() const { return value_; }
  constexpr auto operator<=>(const PValue&) const = default;

 private:
  double value_ = 1.0;
};

struct TestReport {
  double statistic = 0.0;
  PValue p;
  std::string method;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Special functions.

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double x, double a, double b);
double student_t_cdf(double t, double df);
/// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);
double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);
/// Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_sf(double lambda);

// Summary statistics.

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased (n - 1 denominator); 0 when n < 2
};

Moments moments(std::span<const double> xs);

// Two-sample tests (two-sided).

/// Asymptotic two-sample Kolmogorov-Smirnov test.
TestReport ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Welch t-test. Both variances zero: p = 1 for equal means, else 0.
TestReport t_two_sample(std::span<const double> a, std::span<const double> b);
TestReport t_two_sample(const Moments& a, const Moments& b);

/// F = var(a) / var(b), p = 2 min(cdf, sf). Zero variances follow the t-test
/// convention: both zero gives p = 1, exactly one zero gives p = 0.
TestReport f_variance_test(std::span<const double> a, std::span<const double> b);
TestReport f_variance_test(const Moments& a, const Moments& b);

// Multiple testing.

/// min(1, m * min(ps)). Throws ValidationError on an empty list.
PValue bonferroni(std::span<const PValue> ps);
/// min(1, 2 min(p_mean, p_var)).
PValue combine_min_double(PValue p_mean, PValue p_var);

}  // namespace envicp::stats
