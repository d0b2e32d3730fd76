#include <doctest.h>

#include <cmath>

#include "lppi/errors.hpp"
#include "lppi/special_functions.hpp"

using namespace lppi;

TEST_SUITE("special") {

TEST_CASE("incomplete gamma at half-integer a reduces to erf") {
  // P(1/2, x) = erf(sqrt(x)).
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 12.0}) {
    CHECK(regularized_lower_incomplete_gamma(0.5, x) ==
          doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
  }
  // P(1, x) = 1 - exp(-x).
  for (double x : {0.25, 1.0, 3.0, 9.0}) {
    CHECK(regularized_lower_incomplete_gamma(1.0, x) ==
          doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
  }
}

TEST_CASE("chi-square CDF closed form with two degrees of freedom") {
  // With k = 2 the CDF is 1 - exp(-x/2), so x = 2 ln 20 hits 0.95 exactly.
  double x = 2.0 * std::log(20.0);
  CHECK(chi_square_cdf(x, 2.0) == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("chi-square quantiles at standard levels") {
  CHECK(chi_square_quantile(0.95, 1.0) == doctest::Approx(3.841458820694124).epsilon(1e-8));
  CHECK(chi_square_quantile(0.95, 10.0) == doctest::Approx(18.307038053275146).epsilon(1e-8));
  CHECK(chi_square_quantile(0.99, 3.0) == doctest::Approx(11.344866730144373).epsilon(1e-8));
}

TEST_CASE("quantile and CDF round trip") {
  for (double k : {1.0, 2.0, 3.0, 5.0, 10.0, 17.0}) {
    for (double prob : {0.01, 0.1, 0.5, 0.9, 0.95, 0.99, 0.999}) {
      double q = chi_square_quantile(prob, k);
      CHECK(std::fabs(chi_square_cdf(q, k) - prob) < 1e-9);
    }
  }
}

TEST_CASE("CDF is monotone") {
  double prev = -1.0;
  for (double x = 0.0; x <= 40.0; x += 0.25) {
    double c = chi_square_cdf(x, 4.0);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("normal quantile at standard levels") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(normal_quantile(0.84) == doctest::Approx(0.994457883209753).epsilon(1e-10));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("normal quantile is antisymmetric and inverts the CDF") {
  for (double prob : {0.001, 0.01, 0.2, 0.4, 0.6, 0.9, 0.999}) {
    CHECK(std::fabs(normal_quantile(prob) + normal_quantile(1.0 - prob)) < 1e-12);
    CHECK(std::fabs(normal_cdf(normal_quantile(prob)) - prob) < 1e-12);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(chi_square_cdf(1.0, 0.0), InputError);
  CHECK_THROWS_AS(chi_square_quantile(0.0, 2.0), InputError);
  CHECK_THROWS_AS(chi_square_quantile(1.0, 2.0), InputError);
  CHECK_THROWS_AS(normal_quantile(0.0), InputError);
  CHECK_THROWS_AS(regularized_lower_incomplete_gamma(-1.0, 1.0), InputError);
  CHECK_THROWS_AS(regularized_lower_incomplete_gamma(1.0, -1.0), InputError);
}

}  // TEST_SUITE
