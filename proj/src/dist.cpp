#include "lobres/dist.hpp"

#include <cmath>
#include <stdexcept>

#include "lobres/special_functions.hpp"

namespace lobres {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

void require_tau(double tau) {
  if (!(tau > 0.0)) throw std::domain_error("dist: tau must be > 0");
}

double gg_theta(const ParamSet& p) {
  return 1.0 / (p.sigma * p.sigma * p.nu * p.nu);
}
}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::lognormal: return "lognormal";
    case Family::gamma: return "gamma";
    case Family::weibull: return "weibull";
    case Family::gengamma: return "gengamma";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "lognormal") return Family::lognormal;
  if (name == "gamma") return Family::gamma;
  if (name == "weibull") return Family::weibull;
  if (name == "gengamma") return Family::gengamma;
  throw std::invalid_argument("unknown family: " + name);
}

GgdNatural to_natural(const ParamSet& p) {
  validate_params(p);
  if (p.family != Family::gengamma || !(p.nu > 0.0))
    throw std::domain_error("to_natural: requires gengamma with nu > 0");
  const double theta = gg_theta(p);
  return GgdNatural{p.nu, p.mu * std::pow(theta, -1.0 / p.nu), theta};
}

ParamSet from_natural(const GgdNatural& g) {
  if (!(g.b > 0.0) || !(g.a > 0.0) || !(g.k > 0.0))
    throw std::domain_error("from_natural: need b, a, k > 0");
  ParamSet p;
  p.family = Family::gengamma;
  p.nu = g.b;
  p.mu = g.a * std::pow(g.k, 1.0 / g.b);
  p.sigma = 1.0 / (g.b * std::sqrt(g.k));
  return p;
}

void validate_params(const ParamSet& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma))
    throw std::domain_error("dist: sigma must be > 0");
  if (!std::isfinite(p.mu)) throw std::domain_error("dist: mu must be finite");
  if (p.family != Family::lognormal && !(p.mu > 0.0))
    throw std::domain_error("dist: mu must be > 0 for this family");
  if (p.family == Family::gengamma && (p.nu == 0.0 || !std::isfinite(p.nu)))
    throw std::domain_error("dist: gengamma nu must be finite and nonzero");
}

double log_pdf(const ParamSet& p, double tau) {
  validate_params(p);
  require_tau(tau);
  const double lt = std::log(tau);
  switch (p.family) {
    case Family::lognormal: {
      const double z = (lt - p.mu) / p.sigma;
      return -lt - std::log(p.sigma) - 0.5 * kLog2Pi - 0.5 * z * z;
    }
    case Family::gamma: {
      const double alpha = 1.0 / (p.sigma * p.sigma);
      const double lscale = std::log(p.sigma * p.sigma * p.mu);
      return -std::lgamma(alpha) - alpha * lscale + (alpha - 1.0) * lt -
             tau / (p.sigma * p.sigma * p.mu);
    }
    case Family::weibull: {
      const double lbeta = std::log(p.mu) - std::lgamma(1.0 / p.sigma + 1.0);
      const double z = std::exp(p.sigma * (lt - lbeta));
      return std::log(p.sigma) - lbeta + (p.sigma - 1.0) * (lt - lbeta) - z;
    }
    case Family::gengamma: {
      const double theta = gg_theta(p);
      const double s = lt - std::log(p.mu);
      const double u = std::exp(p.nu * s);
      return std::log(std::fabs(p.nu)) + theta * std::log(theta) -
             std::lgamma(theta) + p.nu * theta * s - theta * u - lt;
    }
  }
  return 0.0;
}

double pdf(const ParamSet& p, double tau) { return std::exp(log_pdf(p, tau)); }

double cdf(const ParamSet& p, double tau) {
  validate_params(p);
  require_tau(tau);
  const double lt = std::log(tau);
  switch (p.family) {
    case Family::lognormal:
      return norm_cdf((lt - p.mu) / p.sigma);
    case Family::gamma:
      return gamma_p(1.0 / (p.sigma * p.sigma),
                     tau / (p.sigma * p.sigma * p.mu));
    case Family::weibull: {
      const double lbeta = std::log(p.mu) - std::lgamma(1.0 / p.sigma + 1.0);
      return -std::expm1(-std::exp(p.sigma * (lt - lbeta)));
    }
    case Family::gengamma: {
      const double theta = gg_theta(p);
      const double z = theta * std::exp(p.nu * (lt - std::log(p.mu)));
      return p.nu > 0.0 ? gamma_p(theta, z) : gamma_q(theta, z);
    }
  }
  return 0.0;
}

std::pair<double, double> mean_variance(const ParamSet& p) {
  validate_params(p);
  switch (p.family) {
    case Family::lognormal: {
      const double s2 = p.sigma * p.sigma;
      const double m = std::exp(p.mu + 0.5 * s2);
      return {m, std::expm1(s2) * std::exp(2.0 * p.mu + s2)};
    }
    case Family::gamma:
      return {p.mu, p.sigma * p.sigma * p.mu * p.mu};
    case Family::weibull: {
      const double g1 = std::lgamma(1.0 / p.sigma + 1.0);
      const double g2 = std::lgamma(2.0 / p.sigma + 1.0);
      return {p.mu, p.mu * p.mu * std::expm1(g2 - 2.0 * g1)};
    }
    case Family::gengamma: {
      const double theta = gg_theta(p);
      if (theta + 1.0 / p.nu <= 0.0)
        throw std::domain_error("gengamma mean undefined: theta + 1/nu <= 0");
      const double lg = std::lgamma(theta);
      const double lth = std::log(theta);
      const double m =
          p.mu * std::exp(std::lgamma(theta + 1.0 / p.nu) - lg - lth / p.nu);
      if (theta + 2.0 / p.nu <= 0.0)
        throw std::domain_error(
            "gengamma variance undefined: theta + 2/nu <= 0");
      const double e2 = std::exp(std::lgamma(theta + 2.0 / p.nu) - lg -
                                 2.0 * lth / p.nu);
      return {m, p.mu * p.mu * e2 - m * m};
    }
  }
  return {0.0, 0.0};
}

double quantile(const ParamSet& p, double u) {
  validate_params(p);
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("dist: quantile level must be in (0,1)");
  switch (p.family) {
    case Family::lognormal:
      return std::exp(p.mu + p.sigma * norm_quantile(u));
    case Family::gamma: {
      const double alpha = 1.0 / (p.sigma * p.sigma);
      return p.sigma * p.sigma * p.mu * gamma_p_inv(u, alpha);
    }
    case Family::weibull: {
      const double beta = p.mu * std::exp(-std::lgamma(1.0 / p.sigma + 1.0));
      return beta * std::pow(-std::log1p(-u), 1.0 / p.sigma);
    }
    case Family::gengamma: {
      // (tau/a)^b ~ Gamma(k, 1) gives tau = mu (G^{-1}(u; theta, 1)/theta)^{1/nu};
      // the transform direction flips for nu < 0.
      const double theta = gg_theta(p);
      const double g =
          p.nu > 0.0 ? gamma_p_inv(u, theta) : gamma_p_inv(1.0 - u, theta);
      return p.mu * std::pow(g / theta, 1.0 / p.nu);
    }
  }
  return 0.0;
}

Score score(const ParamSet& p, double tau) {
  validate_params(p);
  require_tau(tau);
  const double lt = std::log(tau);
  Score sc;
  switch (p.family) {
    case Family::lognormal: {
      const double z = (lt - p.mu) / p.sigma;
      sc.d_mu = z / p.sigma;
      sc.d_sigma = (z * z - 1.0) / p.sigma;
      return sc;
    }
    case Family::gamma: {
      const double s2 = p.sigma * p.sigma;
      const double alpha = 1.0 / s2;
      sc.d_mu = (tau - p.mu) / (s2 * p.mu * p.mu);
      sc.d_sigma = (2.0 / (p.sigma * s2)) *
                   (digamma(alpha) + std::log(s2 * p.mu) - lt - 1.0 +
                    tau / p.mu);
      return sc;
    }
    case Family::weibull: {
      const double g = 1.0 / p.sigma + 1.0;
      const double lbeta = std::log(p.mu) - std::lgamma(g);
      const double w = lt - lbeta;
      const double z = std::exp(p.sigma * w);
      sc.d_mu = (p.sigma / p.mu) * (z - 1.0);
      sc.d_sigma = 1.0 / p.sigma + (1.0 - z) * w +
                   (z - 1.0) * digamma(g) / p.sigma;
      return sc;
    }
    case Family::gengamma: {
      const double theta = gg_theta(p);
      const double s = lt - std::log(p.mu);
      const double u = std::exp(p.nu * s);
      const double common =
          std::log(theta) + 1.0 + p.nu * s - u - digamma(theta);
      sc.d_mu = (p.nu * theta / p.mu) * (u - 1.0);
      sc.d_sigma = common * (-2.0 * theta / p.sigma);
      sc.d_nu = common * (-2.0 * theta / p.nu) + 1.0 / p.nu +
                theta * s * (1.0 - u);
      return sc;
    }
  }
  return sc;
}

double mean_log(const ParamSet& p) {
  validate_params(p);
  switch (p.family) {
    case Family::lognormal:
      return p.mu;
    case Family::gamma: {
      const double alpha = 1.0 / (p.sigma * p.sigma);
      return digamma(alpha) + std::log(p.sigma * p.sigma * p.mu);
    }
    case Family::weibull: {
      // ln beta - gamma_E / sigma, gamma_E the Euler-Mascheroni constant.
      constexpr double kEulerGamma = 0.57721566490153286061;
      const double lbeta = std::log(p.mu) - std::lgamma(1.0 / p.sigma + 1.0);
      return lbeta - kEulerGamma / p.sigma;
    }
    case Family::gengamma: {
      const double theta = gg_theta(p);
      return std::log(p.mu) +
             (digamma(theta) - std::log(theta)) / p.nu;
    }
  }
  return 0.0;
}

}  // namespace lobres
