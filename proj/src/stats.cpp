#include "envicp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "envicp/error.hpp"

namespace envicp::stats {
namespace {

constexpr double kBetaTolerance = 1e-15;
constexpr int kBetaMaxIterations = 300;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetaTolerance) break;
  }
  return h;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta: shape parameters must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return clamp01(front * beta_continued_fraction(x, a, b) / a);
  return clamp01(1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b);
}

double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

double f_cdf(double f, double df1, double df2) {
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return incomplete_beta(df1 * f / (df1 * f + df2), 0.5 * df1, 0.5 * df2);
}

double f_sf(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(df2 / (df2 + df1 * f), 0.5 * df2, 0.5 * df1);
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kTolerance = 1e-12;
  constexpr int kTerms = 100;
  if (lambda < 1.18) {
    // Jacobi theta form of the CDF converges quickly for small arguments.
    constexpr double kPi2 = 9.869604401089358;
    const double w = kPi2 / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= kTerms; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * w);
      sum += term;
      if (term < kTolerance * sum) break;
    }
    return clamp01(1.0 - 2.5066282746310002 / lambda * sum);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= kTerms; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < kTolerance) break;
  }
  return clamp01(2.0 * sum);
}

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double v : xs) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double v : xs) ss += (v - m.mean) * (v - m.mean);
  m.var = ss / static_cast<double>(m.n - 1);
  return m;
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_two_sample: both samples must be non-empty");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  // Advance through every distinct value so ties move both CDFs together.
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  TestReport r;
  r.statistic = d;
  r.p = PValue(kolmogorov_sf(std::sqrt(ne) * d));
  r.method = "ks";
  r.n_a = sa.size();
  r.n_b = sb.size();
  return r;
}

TestReport t_two_sample(const Moments& a, const Moments& b) {
  if (a.n < 2 || b.n < 2) throw ValidationError("t_two_sample: each sample needs at least two values");
  TestReport r;
  r.method = "welch_t";
  r.n_a = a.n;
  r.n_b = b.n;
  const double va = a.var / static_cast<double>(a.n);
  const double vb = b.var / static_cast<double>(b.n);
  const double diff = a.mean - b.mean;
  if (va + vb == 0.0) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p = PValue(diff == 0.0 ? 1.0 : 0.0);
    return r;
  }
  const double se2 = va + vb;
  const double t = diff / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
  r.statistic = t;
  r.p = PValue(student_t_two_sided(t, df));
  return r;
}

TestReport t_two_sample(std::span<const double> a, std::span<const double> b) {
  return t_two_sample(moments(a), moments(b));
}

TestReport f_variance_test(const Moments& a, const Moments& b) {
  if (a.n < 2 || b.n < 2) throw ValidationError("f_variance_test: each sample needs at least two values");
  TestReport r;
  r.method = "f";
  r.n_a = a.n;
  r.n_b = b.n;
  if (a.var == 0.0 || b.var == 0.0) {
    const bool both = a.var == 0.0 && b.var == 0.0;
    r.statistic = both ? 1.0 : (a.var == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    r.p = PValue(both ? 1.0 : 0.0);
    return r;
  }
  const double f = a.var / b.var;
  const double df1 = static_cast<double>(a.n - 1);
  const double df2 = static_cast<double>(b.n - 1);
  r.statistic = f;
  r.p = PValue(2.0 * std::min(f_cdf(f, df1, df2), f_sf(f, df1, df2)));
  return r;
}

TestReport f_variance_test(std::span<const double> a, std::span<const double> b) {
  return f_variance_test(moments(a), moments(b));
}

PValue bonferroni(std::span<const PValue> ps) {
  if (ps.empty()) throw ValidationError("bonferroni: empty p-value list");
  const double smallest = std::min_element(ps.begin(), ps.end())->value();
  return PValue(std::min(1.0, static_cast<double>(ps.size()) * smallest));
}

PValue combine_min_double(PValue p_mean, PValue p_var) {
  return PValue(std::min(1.0, 2.0 * std::min(p_mean.value(), p_var.value())));
}

}  // namespace envicp::stats
