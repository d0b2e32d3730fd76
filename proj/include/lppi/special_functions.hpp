#pragma once

namespace lppi {

// Chi-square and normal machinery backing the confidence sets. Everything
// here is deterministic arithmetic on doubles, so repeated calls are
// bit-identical across runs and platforms.

// P(a, x), the regularized lower incomplete gamma function.
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double regularized_lower_incomplete_gamma(double a, double x);

// P(chi2_k <= x). k > 0 need not be an integer.
double chi_square_cdf(double x, double k);

// Inverse of chi_square_cdf in x, found by a bracketed root search on the
// CDF to an absolute tolerance of 1e-10.
double chi_square_quantile(double prob, double k);

// Standard normal CDF via erfc.
double normal_cdf(double z);

// Standard normal quantile. Rational initial guess refined by one Halley
// step against the CDF, accurate to close to machine precision.
double normal_quantile(double prob);

}  // namespace lppi
