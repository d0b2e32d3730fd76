#include "lppi/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lppi/errors.hpp"

namespace lppi {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;

// Series P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)).
double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma series did not converge (a=" + std::to_string(a) +
                     ", x=" + std::to_string(x) + ")");
}

// Q(a, x) by the Lentz continued fraction; valid for x >= a + 1.
double upper_gamma_cf(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double f = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    f *= delta;
    if (std::fabs(delta - 1.0) < kEps)
      return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma continued fraction did not converge (a=" +
                     std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

}  // namespace

double regularized_lower_incomplete_gamma(double a, double x) {
  if (a <= 0.0) throw InputError("incomplete gamma needs a > 0");
  if (x < 0.0) throw InputError("incomplete gamma needs x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_gamma_series(a, x);
  return 1.0 - upper_gamma_cf(a, x);
}

double chi_square_cdf(double x, double k) {
  if (k <= 0.0) throw InputError("chi-square needs positive degrees of freedom");
  if (x <= 0.0) return 0.0;
  return regularized_lower_incomplete_gamma(0.5 * k, 0.5 * x);
}

double chi_square_quantile(double prob, double k) {
  if (k <= 0.0) throw InputError("chi-square needs positive degrees of freedom");
  if (prob <= 0.0 || prob >= 1.0)
    throw InputError("chi-square quantile needs probability strictly inside (0, 1)");

  // Bracket the root, then bisect with Newton steps where they stay inside.
  double lo = 0.0;
  double hi = k + 10.0 * std::sqrt(2.0 * k) + 10.0;
  while (chi_square_cdf(hi, k) < prob) hi *= 2.0;
  double x = k;  // mean as the starting point
  for (int i = 0; i < 200; ++i) {
    double f = chi_square_cdf(x, k) - prob;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    if (hi - lo < 1e-10) break;
    // Chi-square density at x, the derivative of the CDF.
    double logpdf = (0.5 * k - 1.0) * std::log(x) - 0.5 * x - std::lgamma(0.5 * k) -
                    0.5 * k * std::log(2.0);
    double pdf = std::exp(logpdf);
    double step = (pdf > 0.0) ? x - f / pdf : 0.0;
    x = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
  }
  return 0.5 * (lo + hi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double prob) {
  if (prob <= 0.0 || prob >= 1.0)
    throw InputError("normal quantile needs probability strictly inside (0, 1)");

  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (prob < plow) {
    double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - plow) {
    double q = prob - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step on f(x) = Phi(x) - prob.
  double e = normal_cdf(x) - prob;
  double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace lppi
