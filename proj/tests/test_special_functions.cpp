#include <doctest.h>

#include <cmath>
#include <random>

#include "lobres/special_functions.hpp"
#include "oracles.hpp"

using namespace lobres;

TEST_CASE("digamma against known values") {
  // psi(1) = -gamma_E, psi(2) = 1 - gamma_E, psi(1/2) = -gamma_E - 2 ln 2
  constexpr double gamma_e = 0.57721566490153286061;
  CHECK(digamma(1.0) == doctest::Approx(-gamma_e).epsilon(1e-13));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - gamma_e).epsilon(1e-13));
  CHECK(digamma(0.5) ==
        doctest::Approx(-gamma_e - 2.0 * std::log(2.0)).epsilon(1e-13));
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
}

TEST_CASE("digamma matches finite differences of lgamma") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.1, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(gen);
    const double fd = oracles::central_diff(
        [](double t) { return std::lgamma(t); }, x, 1e-7);
    CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("incomplete gamma basics") {
  // P(1, x) = 1 - e^{-x}
  for (const double x : {0.1, 0.5, 1.0, 3.0, 10.0})
    CHECK(gamma_p(1.0, x) == doctest::Approx(-std::expm1(-x)).epsilon(1e-13));
  CHECK(gamma_p(2.5, 0.0) == 0.0);
  CHECK(gamma_q(2.5, 0.0) == 1.0);
  for (const double a : {0.3, 1.7, 8.0})
    for (const double x : {0.2, 1.0, 9.0})
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("incomplete gamma matches quadrature of the density") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ua(0.3, 20.0);
  std::uniform_real_distribution<double> ux(0.2, 1.8);
  for (int i = 0; i < 25; ++i) {
    const double a = ua(gen);
    const double x = a * ux(gen);
    const double quad = oracles::integrate(
        [a](double t) {
          return std::exp((a - 1.0) * std::log(t) - t - std::lgamma(a));
        },
        1e-12, x, 1e-13);
    CHECK(gamma_p(a, x) == doctest::Approx(quad).epsilon(1e-9));
  }
}

TEST_CASE("gamma quantile round trip") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> ua(0.1, 40.0);
  std::uniform_real_distribution<double> up(1e-4, 1.0 - 1e-4);
  for (int i = 0; i < 300; ++i) {
    const double a = ua(gen);
    const double p = up(gen);
    const double x = gamma_p_inv(p, a);
    CHECK(gamma_p(a, x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(gamma_p_inv(0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(gamma_p_inv(1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(gamma_p_inv(0.5, -1.0), std::domain_error);
}

TEST_CASE("normal quantile") {
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(norm_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(norm_quantile(0.0013498980316300933) ==
        doctest::Approx(-3.0).epsilon(1e-11));
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> up(1e-8, 1.0 - 1e-8);
  for (int i = 0; i < 500; ++i) {
    const double p = up(gen);
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("incomplete beta and t-test p-values") {
  // I_x(1,1) = x; I_x(2,2) = x^2 (3-2x)
  for (const double x : {0.1, 0.4, 0.9}) {
    CHECK(inc_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(inc_beta(2.0, 2.0, x) ==
          doctest::Approx(x * x * (3.0 - 2.0 * x)).epsilon(1e-12));
  }
  // Two-sided normal p at 1.96 straddles 5%.
  CHECK(t_test_pvalue(1.959, 0.0) > 0.05);
  CHECK(t_test_pvalue(1.961, 0.0) < 0.05);
  // t with df=10 at 2.228 is the textbook 5% two-sided critical value.
  CHECK(t_test_pvalue(2.228, 10.0) == doctest::Approx(0.05).epsilon(1e-3));
}
