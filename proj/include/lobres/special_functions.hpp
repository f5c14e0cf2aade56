#pragma once

// Scalar special functions used by the duration distributions and the
// inference code. All functions operate on doubles and throw
// std::domain_error on arguments outside their domain.

namespace lobres {

// Digamma psi(x) for x > 0. Recurrence below 6, asymptotic series above.
double digamma(double x);

// Regularised incomplete gamma functions, P(a,x) + Q(a,x) = 1, a > 0, x >= 0.
// Series expansion for x < a+1, continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Inverse of gamma_p in x: returns x with gamma_p(a, x) = p, p in [0,1).
// Wilson-Hilferty start, safeguarded Newton. Throws std::runtime_error
// with diagnostics if the iteration fails to converge.
double gamma_p_inv(double p, double a);

// Standard normal cdf / quantile. The quantile is a rational
// approximation polished with one Halley step; |error| < 1e-14.
double norm_cdf(double z);
double norm_quantile(double p);

// Regularised incomplete beta I_x(a,b) via continued fraction.
double inc_beta(double a, double b, double x);

// Two-sided p-value of a t-statistic against Student-t with df degrees
// of freedom, or against the standard normal when df <= 0.
double t_test_pvalue(double t, double df);

}  // namespace lobres
