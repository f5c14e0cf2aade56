#pragma once

#include <string>
#include <utility>

// Duration response families. All four are expressed in the common
// (mu, sigma, nu) parameterisation used by the fitting code:
//
//   lognormal:  ln(tau) ~ Normal(mu, sigma)
//   gamma:      E[tau] = mu, Var[tau] = sigma^2 mu^2
//   weibull:    shape sigma, scale mu / Gamma(1/sigma + 1), so E[tau] = mu
//   gengamma:   f(tau) = |nu| theta^theta (tau/mu)^(nu theta)
//                        exp(-theta (tau/mu)^nu) / (Gamma(theta) tau),
//               theta = 1 / (sigma^2 nu^2)
//
// The generalised gamma also has a "natural" (b, a, k) form,
//   f(tau) = b tau^(bk-1) exp(-(tau/a)^b) / (Gamma(k) a^(bk)),
// related by b = nu, a = mu theta^(-1/nu), k = theta (bijective for nu > 0).
// It nests the exponential (b=k=1), Weibull (k=1), gamma (b=1) and, in the
// k -> infinity limit, the lognormal.

namespace lobres {

enum class Family { lognormal, gamma, weibull, gengamma };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

struct ParamSet {
  Family family = Family::lognormal;
  double mu = 0.0;
  double sigma = 1.0;
  double nu = 1.0;  // gengamma only; ignored elsewhere
};

struct GgdNatural {
  double b = 1.0;
  double a = 1.0;
  double k = 1.0;
};

// Conversions between the two gengamma forms. to_natural requires nu > 0.
GgdNatural to_natural(const ParamSet& p);
ParamSet from_natural(const GgdNatural& g);

// Throws std::domain_error when the parameter constraints are violated
// (sigma > 0 always; mu > 0 except lognormal; nu != 0 for gengamma).
void validate_params(const ParamSet& p);

// Density and log-density at tau > 0.
double log_pdf(const ParamSet& p, double tau);
double pdf(const ParamSet& p, double tau);

// Cumulative distribution at tau > 0.
double cdf(const ParamSet& p, double tau);

// (mean, variance). Throws std::domain_error when a gengamma moment does
// not exist (theta + 1/nu <= 0 or theta + 2/nu <= 0).
std::pair<double, double> mean_variance(const ParamSet& p);

// Quantile at level u in (0,1).
double quantile(const ParamSet& p, double u);

// Gradient of log_pdf in (mu, sigma, nu). d_nu is 0 for two-parameter
// families.
struct Score {
  double d_mu = 0.0;
  double d_sigma = 0.0;
  double d_nu = 0.0;
};
Score score(const ParamSet& p, double tau);

// E[ln tau] under the family; used by the log-scale fit diagnostics.
double mean_log(const ParamSet& p);

}  // namespace lobres
