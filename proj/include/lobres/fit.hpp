#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lobres/dist.hpp"

// The regression hierarchy: OLS on log durations, single-link ML (GLM
// style), and multi-link ML where scale (and for the generalised gamma,
// shape) parameters get their own linear predictors.
//
// Links follow the response family: lognormal uses the identity for mu (on
// the log-response scale) and log for sigma; gamma/weibull/gengamma use log
// for mu and sigma; the gengamma nu link is the identity. In single-link
// mode sigma (and nu) are scalar free parameters without covariates.
//
// Covariates are standardised internally for optimisation and the
// coefficients and their covariance mapped back, so fits are invariant
// under affine rescaling of the design columns.

namespace lobres {

enum class LinkMode { single, two_link, three_link };

const char* link_mode_name(LinkMode m);
LinkMode link_mode_from_name(const std::string& name);

struct FittedModel {
  Family family = Family::lognormal;
  LinkMode mode = LinkMode::single;
  bool via_ols = false;  // fit_loglinear path (classical OLS inference)

  std::vector<std::string> covariate_names;  // p entries, no intercept

  // mu-link coefficients, intercept first (length p+1).
  Eigen::VectorXd beta, beta_se;
  // sigma: length p+1 when the sigma link is active, else length 1
  // holding ln(sigma).
  Eigen::VectorXd alpha, alpha_se;
  // nu (gengamma only): length p+1 in three-link mode, else length 1
  // holding nu itself. Empty for other families.
  Eigen::VectorXd nu_coef, nu_se;

  std::vector<int> dropped;  // aliased covariate indices (coef/se zeroed)

  double log_lik = 0.0;
  double deviance = 0.0;  // -2 log_lik
  double adj_pseudo_r2 = 0.0;
  bool converged = false;
  int iterations = 0;
  int n = 0;

  int n_active() const {
    return static_cast<int>(covariate_names.size() - dropped.size());
  }
};

// Optional warm start on the natural coefficient scale; vector sizes must
// match the mode (see FittedModel) or be empty to use defaults.
struct FitInit {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd nu_coef;
};

// OLS of ln(tau) on X with intercept via QR; classical standard errors and
// adjusted R^2. Aliased columns are dropped with a warning flag in
// `dropped`. Requires n > p+1 and tau > 0.
FittedModel fit_loglinear(const Eigen::MatrixXd& X, const Eigen::VectorXd& tau,
                          const std::vector<std::string>& names);

// Maximum likelihood fit. Terminates when the relative log-likelihood
// change is < 1e-10 and the max absolute score is < 1e-6, or after 200
// iterations (converged = false, best-so-far values kept). Extra `inits`
// are evaluated alongside the defaults and the best start is used.
FittedModel fit_ml(Family family, LinkMode mode, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& tau,
                   const std::vector<std::string>& names,
                   const std::vector<FitInit>& inits = {});

// Convenience: fit several families on the same data. The gengamma fit is
// warm-started from the converged gamma/weibull solutions (it nests both),
// which keeps its deviance from landing above theirs in local optima.
std::map<Family, FittedModel> fit_families(
    const std::vector<Family>& families, LinkMode mode,
    const Eigen::MatrixXd& X, const Eigen::VectorXd& tau,
    const std::vector<std::string>& names);

// Lowest-deviance designation among converged fits, with the lognormal
// fallback applied whenever a requested gengamma fit failed to converge.
std::optional<Family> designate_best(
    const std::map<Family, FittedModel>& fits);

struct WaldTest {
  double t = 0.0;
  bool significant = false;
  bool testable = true;  // false when se == 0 (e.g. aliased column)
};

// Two-sided 5% tests on the mu-link coefficients (intercept first):
// Student-t with n-p-1 df for OLS fits, standard normal for ML fits.
std::vector<WaldTest> wald_tests(const FittedModel& model);

// Adjusted pseudo-R^2 on the log scale: 1 - (1-R2)(n-1)/(n-p-1) with R2
// computed between ln(tau) and the model-implied E[ln tau | x]. Coincides
// with the classical adjusted R^2 for lognormal fits.
double pseudo_r2(const FittedModel& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& tau);

// Distribution parameters implied by the fitted links at covariate row x.
ParamSet params_at(const FittedModel& model, const Eigen::VectorXd& x);
double conditional_mean(const FittedModel& model, const Eigen::VectorXd& x);

struct UnitEffect {
  double d_mean = 0.0;
  double d_variance = 0.0;
  int direction = 0;  // sign of the mu-link coefficient
};

// Partial effects of a unit covariate change on the conditional mean and
// variance at x0: closed forms for lognormal/gamma, central differences
// through mean_variance for weibull/gengamma.
std::vector<UnitEffect> unit_change_effects(const FittedModel& model,
                                            const Eigen::VectorXd& x0);

// Model JSON round trip (schema_version 1).
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

}  // namespace lobres
