#include "lobres/fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lobres/special_functions.hpp"

namespace lobres {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNuLo = 0.05;
constexpr double kNuHi = 20.0;

double logistic(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double nu_from_t(double t) { return kNuLo + (kNuHi - kNuLo) * logistic(t); }
double dnu_dt(double t) {
  const double s = logistic(t);
  return (kNuHi - kNuLo) * s * (1.0 - s);
}
double t_from_nu(double nu) {
  double r = (nu - kNuLo) / (kNuHi - kNuLo);
  r = std::clamp(r, 1e-9, 1.0 - 1e-9);
  return std::log(r / (1.0 - r));
}

// ---------------------------------------------------------------------------
// Standardised design with aliased-column handling.

struct Design {
  int n = 0, p = 0;
  std::vector<int> active;   // kept covariate indices, ascending
  std::vector<int> dropped;  // aliased covariate indices
  VectorXd mean, scale;      // per active column
  MatrixXd Z;                // n x (pa+1), leading column of ones
};

Design build_design(const MatrixXd& X) {
  Design d;
  d.n = static_cast<int>(X.rows());
  d.p = static_cast<int>(X.cols());

  std::vector<int> candidates;
  std::vector<double> means, scales;
  for (int j = 0; j < d.p; ++j) {
    const double m = X.col(j).mean();
    const double ss = (X.col(j).array() - m).square().sum();
    const double sd = std::sqrt(ss / std::max(1, d.n - 1));
    if (sd <= 0.0 || !std::isfinite(sd)) {
      d.dropped.push_back(j);  // constant column: aliased with the intercept
      continue;
    }
    candidates.push_back(j);
    means.push_back(m);
    scales.push_back(sd);
  }

  // Rank detection among the centred/scaled columns.
  if (!candidates.empty()) {
    MatrixXd C(d.n, candidates.size());
    for (size_t k = 0; k < candidates.size(); ++k)
      C.col(static_cast<int>(k)) =
          (X.col(candidates[k]).array() - means[k]) / scales[k];
    Eigen::ColPivHouseholderQR<MatrixXd> qr(C);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank < static_cast<int>(candidates.size())) {
      const auto perm = qr.colsPermutation().indices();
      std::vector<bool> keep(candidates.size(), false);
      for (int k = 0; k < rank; ++k) keep[static_cast<size_t>(perm[k])] = true;
      std::vector<int> kept;
      std::vector<double> km, ks;
      for (size_t k = 0; k < candidates.size(); ++k) {
        if (keep[k]) {
          kept.push_back(candidates[k]);
          km.push_back(means[k]);
          ks.push_back(scales[k]);
        } else {
          d.dropped.push_back(candidates[k]);
        }
      }
      candidates = kept;
      means = km;
      scales = ks;
    }
  }
  std::sort(d.dropped.begin(), d.dropped.end());

  d.active = candidates;
  const int pa = static_cast<int>(candidates.size());
  d.mean = Eigen::Map<VectorXd>(means.data(), pa);
  d.scale = Eigen::Map<VectorXd>(scales.data(), pa);
  d.Z.resize(d.n, pa + 1);
  d.Z.col(0).setOnes();
  for (int k = 0; k < pa; ++k)
    d.Z.col(k + 1) = (X.col(d.active[static_cast<size_t>(k)]).array() -
                      d.mean[k]) /
                     d.scale[k];
  return d;
}

// Affine map from standardised coefficients to natural ones:
// b_nat = A * b_std with A(0,0)=1, A(0,k)=-m_k/s_k, A(k,k)=1/s_k.
MatrixXd destd_matrix(const Design& d) {
  const int pa = static_cast<int>(d.active.size());
  MatrixXd A = MatrixXd::Zero(pa + 1, pa + 1);
  A(0, 0) = 1.0;
  for (int k = 0; k < pa; ++k) {
    A(0, k + 1) = -d.mean[k] / d.scale[k];
    A(k + 1, k + 1) = 1.0 / d.scale[k];
  }
  return A;
}

// Inverse map (natural -> standardised), used for warm starts.
VectorXd std_from_natural(const Design& d, const VectorXd& b_nat_full) {
  const int pa = static_cast<int>(d.active.size());
  VectorXd phi(pa + 1);
  double b0 = b_nat_full[0];
  for (int k = 0; k < pa; ++k) {
    const double bj = b_nat_full[d.active[static_cast<size_t>(k)] + 1];
    phi[k + 1] = bj * d.scale[k];
    b0 += bj * d.mean[k];
  }
  phi[0] = b0;
  return phi;
}

// Expand an active-coefficient vector (pa+1) to the full p+1 layout.
VectorXd expand_full(const Design& d, const VectorXd& b_active) {
  VectorXd full = VectorXd::Zero(d.p + 1);
  full[0] = b_active[0];
  for (size_t k = 0; k < d.active.size(); ++k)
    full[d.active[k] + 1] = b_active[static_cast<int>(k) + 1];
  return full;
}

// ---------------------------------------------------------------------------
// OLS core (shared by fit_loglinear and the lognormal single-link ML).

struct OlsCore {
  VectorXd b_std;       // pa+1
  VectorXd fitted;      // n
  double rss = 0.0;
  double ss_tot = 0.0;
  MatrixXd ztz_inv;     // (Z'Z)^{-1}
};

OlsCore ols_core(const Design& d, const VectorXd& y) {
  OlsCore c;
  Eigen::HouseholderQR<MatrixXd> qr(d.Z);
  c.b_std = qr.solve(y);
  c.fitted = d.Z * c.b_std;
  c.rss = (y - c.fitted).squaredNorm();
  c.ss_tot = (y.array() - y.mean()).square().sum();
  const MatrixXd ztz = d.Z.transpose() * d.Z;
  c.ztz_inv = ztz.ldlt().solve(
      MatrixXd::Identity(ztz.rows(), ztz.cols()));
  return c;
}

double lognormal_loglik(const VectorXd& log_tau, const VectorXd& fitted,
                        double sigma) {
  const int n = static_cast<int>(log_tau.size());
  const double rss = (log_tau - fitted).squaredNorm();
  return -0.5 * n * std::log(2.0 * M_PI) - n * std::log(sigma) -
         log_tau.sum() - 0.5 * rss / (sigma * sigma);
}

VectorXd log_of(const VectorXd& tau) {
  for (int i = 0; i < tau.size(); ++i)
    if (!(tau[i] > 0.0))
      throw std::invalid_argument("fit: responses must be > 0");
  return tau.array().log();
}

// ---------------------------------------------------------------------------
// ML problem: negative log-likelihood with analytic gradient on the
// standardised scale. Returns +inf outside the valid parameter region.

struct MlProblem {
  Family fam;
  LinkMode mode;
  const Design& d;
  const VectorXd& tau;
  VectorXd log_tau;

  bool sigma_link = false;
  bool nu_link = false;
  int beta_n = 0, alpha_n = 0, nu_n = 0;

  MlProblem(Family f, LinkMode m, const Design& dd, const VectorXd& t)
      : fam(f), mode(m), d(dd), tau(t), log_tau(t.array().log()) {
    const int pa1 = static_cast<int>(d.active.size()) + 1;
    sigma_link = (mode != LinkMode::single);
    nu_link = (mode == LinkMode::three_link && fam == Family::gengamma);
    beta_n = pa1;
    alpha_n = sigma_link ? pa1 : 1;
    nu_n = fam == Family::gengamma ? (nu_link ? pa1 : 1) : 0;
  }

  int dim() const { return beta_n + alpha_n + nu_n; }

  // Negative loglik + gradient; +inf when invalid.
  double operator()(const VectorXd& phi, VectorXd& grad) const {
    const int n = d.n;
    grad.setZero(dim());
    const VectorXd eta = d.Z * phi.head(beta_n);
    VectorXd zeta;
    double zeta_scalar = 0.0;
    if (sigma_link)
      zeta = d.Z * phi.segment(beta_n, alpha_n);
    else
      zeta_scalar = phi[beta_n];

    VectorXd nu_vec;
    double nu_scalar = 1.0, dnu = 0.0;
    if (fam == Family::gengamma) {
      if (nu_link) {
        nu_vec = d.Z * phi.tail(nu_n);
      } else {
        const double t = phi[beta_n + alpha_n];
        nu_scalar = nu_from_t(t);
        dnu = dnu_dt(t);
      }
    }

    double L = 0.0;
    ParamSet ps;
    ps.family = fam;
    for (int i = 0; i < n; ++i) {
      if (fam == Family::lognormal) {
        ps.mu = eta[i];
      } else {
        if (eta[i] > 700.0) return std::numeric_limits<double>::infinity();
        ps.mu = std::exp(eta[i]);
        if (!(ps.mu > 0.0)) return std::numeric_limits<double>::infinity();
      }
      const double z = sigma_link ? zeta[i] : zeta_scalar;
      if (std::fabs(z) > 300.0) return std::numeric_limits<double>::infinity();
      ps.sigma = std::exp(z);
      if (fam == Family::gengamma) {
        ps.nu = nu_link ? nu_vec[i] : nu_scalar;
        if (!(ps.nu > kNuLo && ps.nu < kNuHi))
          return std::numeric_limits<double>::infinity();
      }
      const double lp = log_pdf(ps, tau[i]);
      if (!std::isfinite(lp)) return std::numeric_limits<double>::infinity();
      L += lp;

      const Score sc = score(ps, tau[i]);
      const double dmu_deta = fam == Family::lognormal ? 1.0 : ps.mu;
      grad.head(beta_n) -= sc.d_mu * dmu_deta * d.Z.row(i).transpose();
      if (sigma_link)
        grad.segment(beta_n, alpha_n) -=
            sc.d_sigma * ps.sigma * d.Z.row(i).transpose();
      else
        grad[beta_n] -= sc.d_sigma * ps.sigma;
      if (fam == Family::gengamma) {
        if (nu_link)
          grad.tail(nu_n) -= sc.d_nu * d.Z.row(i).transpose();
        else
          grad[beta_n + alpha_n] -= sc.d_nu * dnu;
      }
    }
    if (!grad.allFinite()) return std::numeric_limits<double>::infinity();
    return -L;
  }
};

// ---------------------------------------------------------------------------
// Quasi-Newton minimiser: BFGS with backtracking, then Newton polish with a
// finite-difference Hessian of the analytic gradient. Accepted steps only
// ever decrease the objective.

struct OptResult {
  VectorXd x, g;
  double f = 0.0;
  int iters = 0;
  double last_rel_change = 1e300;
  bool line_search_failed = false;
};

using EvalFn = std::function<double(const VectorXd&, VectorXd&)>;

MatrixXd fd_hessian(const EvalFn& eval, const VectorXd& x) {
  const int dd = static_cast<int>(x.size());
  MatrixXd H(dd, dd);
  VectorXd gp(dd), gm(dd);
  for (int j = 0; j < dd; ++j) {
    double h = 1e-5 * (1.0 + std::fabs(x[j]));
    VectorXd xp = x, xm = x;
    double fp = 0.0, fm = 0.0;
    for (int tries = 0; tries < 4; ++tries) {
      xp[j] = x[j] + h;
      xm[j] = x[j] - h;
      fp = eval(xp, gp);
      fm = eval(xm, gm);
      if (std::isfinite(fp) && std::isfinite(fm)) break;
      h *= 0.1;
    }
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      H.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

// One Armijo backtracking search; returns true on an accepted step. Once
// the requested decrease falls below the floating-point resolution of f,
// objective comparisons are pure noise, so acceptance switches to a
// gradient-norm reduction test (the analytic score still has headroom and
// Newton keeps contracting it).
bool line_search(const EvalFn& eval, VectorXd& x, double& f, VectorXd& g,
                 const VectorXd& p, double gp, VectorXd& s, VectorXd& y) {
  double step = 1.0;
  VectorXd gn(g.size());
  // Summation noise of an n-term log-likelihood is well above one ulp of
  // f; the gradient gate below keeps this from admitting drift.
  const double f_res = 1e-9 * (1.0 + std::fabs(f));
  const double g_inf = g.lpNorm<Eigen::Infinity>();
  for (int ls = 0; ls < 60; ++ls) {
    const VectorXd xn = x + step * p;
    const double fn = eval(xn, gn);
    if (std::isfinite(fn)) {
      const bool armijo = fn <= f + 1e-4 * step * gp;
      const bool score_progress =
          fn <= f + f_res && gn.lpNorm<Eigen::Infinity>() <= 0.7 * g_inf;
      if (armijo || score_progress) {
        s = step * p;
        y = gn - g;
        x = xn;
        f = fn;
        g = gn;
        return true;
      }
    }
    step *= 0.5;  // also handles non-finite likelihoods
  }
  return false;
}

OptResult minimize(const EvalFn& eval, VectorXd x0, int max_iters) {
  OptResult r;
  r.x = std::move(x0);
  const int dd = static_cast<int>(r.x.size());
  r.g.resize(dd);
  r.f = eval(r.x, r.g);
  if (!std::isfinite(r.f))
    throw std::runtime_error("fit: starting point has non-finite likelihood");

  MatrixXd H = MatrixXd::Identity(dd, dd);
  int stall = 0;

  // BFGS phase.
  while (r.iters < max_iters) {
    if (r.g.lpNorm<Eigen::Infinity>() < 1e-6 && r.last_rel_change < 1e-10)
      break;
    VectorXd p = -H * r.g;
    double gp = r.g.dot(p);
    if (!(gp < 0.0)) {
      H.setIdentity();
      p = -r.g;
      gp = r.g.dot(p);
      if (!(gp < 0.0)) break;
    }
    const double f_old = r.f;
    VectorXd s(dd), y(dd);
    if (!line_search(eval, r.x, r.f, r.g, p, gp, s, y)) {
      r.line_search_failed = true;
      break;
    }
    ++r.iters;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
      const MatrixXd c = (Hy * s.transpose()) / sy;
      H -= c + c.transpose();
    }
    r.last_rel_change = std::fabs(f_old - r.f) / (std::fabs(f_old) + 1e-12);
    if (r.last_rel_change < 1e-13) {
      if (++stall >= 2) break;
    } else {
      stall = 0;
    }
  }

  // Newton polish: quadratic contraction of the score down to (or just
  // past) the convergence tolerance.
  int no_progress = 0;
  for (int k = 0; k < 40 && r.iters < max_iters; ++k) {
    const double g_before = r.g.lpNorm<Eigen::Infinity>();
    if (g_before < 1e-7) break;
    const MatrixXd Hn = fd_hessian(eval, r.x);
    VectorXd p;
    bool have_dir = Hn.allFinite();
    if (have_dir) {
      p = Hn.ldlt().solve(-r.g);
      have_dir = p.allFinite() && r.g.dot(p) < 0.0;
    }
    if (!have_dir) p = -r.g;
    const double gp = r.g.dot(p);
    if (!(gp < 0.0)) break;
    const double f_old = r.f;
    VectorXd s(dd), y(dd);
    if (!line_search(eval, r.x, r.f, r.g, p, gp, s, y)) {
      r.line_search_failed = true;
      break;
    }
    ++r.iters;
    r.last_rel_change = std::fabs(f_old - r.f) / (std::fabs(f_old) + 1e-12);
    // Stop only when the score genuinely stops improving (its attainable
    // floor); slow contraction on ill-conditioned ridges is still progress.
    if (r.g.lpNorm<Eigen::Infinity>() >= 0.995 * g_before) {
      if (++no_progress >= 2) break;
    } else {
      no_progress = 0;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

void check_inputs(const MatrixXd& X, const VectorXd& tau,
                  const std::vector<std::string>& names) {
  if (X.rows() != tau.size())
    throw std::invalid_argument("fit: X rows != response length");
  if (static_cast<int>(names.size()) != X.cols())
    throw std::invalid_argument("fit: names size != X cols");
  if (X.rows() <= X.cols() + 1)
    throw std::invalid_argument("fit: need n > p+1");
}

double adj_r2_log_scale(const FittedModel& m, const MatrixXd& X,
                        const VectorXd& log_tau) {
  const int n = static_cast<int>(X.rows());
  double ss_res = 0.0;
  const double ybar = log_tau.mean();
  double ss_tot = 0.0;
  for (int i = 0; i < n; ++i) {
    const ParamSet ps = params_at(m, X.row(i).transpose());
    const double mi = mean_log(ps);
    ss_res += (log_tau[i] - mi) * (log_tau[i] - mi);
    ss_tot += (log_tau[i] - ybar) * (log_tau[i] - ybar);
  }
  if (ss_tot <= 0.0) return 1.0;
  const double r2 = 1.0 - ss_res / ss_tot;
  const int pa = m.n_active();
  return 1.0 - (1.0 - r2) * (n - 1.0) / (n - pa - 1.0);
}

}  // namespace

const char* link_mode_name(LinkMode m) {
  switch (m) {
    case LinkMode::single: return "single";
    case LinkMode::two_link: return "two-link";
    case LinkMode::three_link: return "three-link";
  }
  return "?";
}

LinkMode link_mode_from_name(const std::string& name) {
  if (name == "single") return LinkMode::single;
  if (name == "two-link") return LinkMode::two_link;
  if (name == "three-link") return LinkMode::three_link;
  throw std::invalid_argument("unknown link mode: " + name);
}

FittedModel fit_loglinear(const MatrixXd& X, const VectorXd& tau,
                          const std::vector<std::string>& names) {
  check_inputs(X, tau, names);
  const VectorXd y = log_of(tau);
  const Design d = build_design(X);
  const OlsCore c = ols_core(d, y);
  const int n = d.n;
  const int pa = static_cast<int>(d.active.size());
  const double dof = n - pa - 1.0;
  const double sigma2_hat = std::max(c.rss, 1e-300) / dof;

  FittedModel m;
  m.family = Family::lognormal;
  m.mode = LinkMode::single;
  m.via_ols = true;
  m.covariate_names = names;
  m.dropped = d.dropped;
  m.n = n;

  const MatrixXd A = destd_matrix(d);
  const MatrixXd cov_nat = A * (sigma2_hat * c.ztz_inv) * A.transpose();
  m.beta = expand_full(d, A * c.b_std);
  m.beta_se = expand_full(d, cov_nat.diagonal().array().max(0.0).sqrt().matrix());

  const double sigma_ml = std::sqrt(std::max(c.rss, 1e-300) / n);
  m.alpha = VectorXd::Constant(1, std::log(sigma_ml));
  m.alpha_se = VectorXd::Zero(1);  // not part of classical OLS inference

  m.log_lik = lognormal_loglik(y, c.fitted, sigma_ml);
  m.deviance = -2.0 * m.log_lik;
  const double r2 = c.ss_tot > 0.0 ? 1.0 - c.rss / c.ss_tot : 1.0;
  m.adj_pseudo_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / dof;
  m.converged = true;
  m.iterations = 1;
  return m;
}

namespace {

// Closed-form ML for the lognormal single-link model (identical beta to
// OLS, sigma^2 = RSS/n, information-matrix standard errors).
FittedModel fit_lognormal_single(const MatrixXd& X, const VectorXd& tau,
                                 const std::vector<std::string>& names) {
  const VectorXd y = log_of(tau);
  const Design d = build_design(X);
  const OlsCore c = ols_core(d, y);
  const int n = d.n;
  const double sigma2_ml = std::max(c.rss, 1e-300) / n;

  FittedModel m;
  m.family = Family::lognormal;
  m.mode = LinkMode::single;
  m.covariate_names = names;
  m.dropped = d.dropped;
  m.n = n;

  const MatrixXd A = destd_matrix(d);
  const MatrixXd cov_nat = A * (sigma2_ml * c.ztz_inv) * A.transpose();
  m.beta = expand_full(d, A * c.b_std);
  m.beta_se = expand_full(d, cov_nat.diagonal().array().max(0.0).sqrt().matrix());
  m.alpha = VectorXd::Constant(1, 0.5 * std::log(sigma2_ml));
  m.alpha_se = VectorXd::Constant(1, std::sqrt(0.5 / n));
  m.log_lik = lognormal_loglik(y, c.fitted, std::sqrt(sigma2_ml));
  m.deviance = -2.0 * m.log_lik;
  m.adj_pseudo_r2 = adj_r2_log_scale(m, X, y);
  m.converged = true;
  m.iterations = 1;
  return m;
}

}  // namespace

FittedModel fit_ml(Family family, LinkMode mode, const MatrixXd& X,
                   const VectorXd& tau, const std::vector<std::string>& names,
                   const std::vector<FitInit>& inits) {
  check_inputs(X, tau, names);
  if (mode == LinkMode::three_link && family != Family::gengamma)
    throw std::invalid_argument("fit_ml: three-link requires gengamma");
  if (family == Family::lognormal && mode == LinkMode::single && inits.empty())
    return fit_lognormal_single(X, tau, names);

  const VectorXd y = log_of(tau);
  const Design d = build_design(X);
  MlProblem prob(family, mode, d, tau);
  const int pa1 = static_cast<int>(d.active.size()) + 1;

  // Start candidates around the OLS solution on ln(tau).
  const OlsCore c = ols_core(d, y);
  const double s = std::sqrt(std::max(c.rss, 1e-12) / std::max(1, d.n - pa1));
  const double mean_shift = family == Family::lognormal ? 0.0 : 0.5 * s * s;

  auto make_start = [&](double lnsigma, double nu) {
    VectorXd phi = VectorXd::Zero(prob.dim());
    phi.head(prob.beta_n) = c.b_std;
    phi[0] += mean_shift;
    phi[prob.beta_n] = lnsigma;  // intercept of the sigma block either way
    if (prob.nu_n > 0) {
      const int off = prob.beta_n + prob.alpha_n;
      phi[off] = prob.nu_link ? nu : t_from_nu(nu);
    }
    return phi;
  };

  std::vector<VectorXd> starts;
  starts.push_back(make_start(std::log(s), 1.0));  // ln(residual SD)
  switch (family) {                                 // family-tuned variants
    case Family::gamma:
    case Family::gengamma:
      starts.push_back(make_start(0.5 * std::log(std::expm1(s * s)), 1.0));
      break;
    case Family::weibull:
      starts.push_back(make_start(std::log(1.2825 / s), 1.0));
      break;
    default:
      break;
  }
  {
    VectorXd phi0 = make_start(std::log(std::max(s, 1e-3)), 1.0);
    phi0.segment(1, prob.beta_n - 1).setZero();  // intercept-only fallback
    starts.push_back(phi0);
  }
  for (const auto& init : inits) {
    VectorXd phi = VectorXd::Zero(prob.dim());
    if (init.beta.size() != d.p + 1) continue;
    phi.head(prob.beta_n) = std_from_natural(d, init.beta);
    if (prob.sigma_link) {
      if (init.alpha.size() == d.p + 1)
        phi.segment(prob.beta_n, prob.alpha_n) = std_from_natural(d, init.alpha);
      else if (init.alpha.size() == 1)
        phi[prob.beta_n] = init.alpha[0];  // intercept-only start
      else
        continue;
    } else {
      if (init.alpha.size() != 1) continue;
      phi[prob.beta_n] = init.alpha[0];
    }
    if (prob.nu_n > 0) {
      const int off = prob.beta_n + prob.alpha_n;
      if (prob.nu_link) {
        if (init.nu_coef.size() == d.p + 1)
          phi.tail(prob.nu_n) = std_from_natural(d, init.nu_coef);
        else if (init.nu_coef.size() == 1)
          phi[off] = init.nu_coef[0];
        else
          continue;
      } else {
        if (init.nu_coef.size() != 1) continue;
        phi[off] = t_from_nu(init.nu_coef[0]);
      }
    }
    starts.push_back(phi);
  }

  const EvalFn eval = [&prob](const VectorXd& x, VectorXd& g) {
    return prob(x, g);
  };
  VectorXd g_tmp(prob.dim());
  double best_f = std::numeric_limits<double>::infinity();
  VectorXd best_start;
  for (const auto& st : starts) {
    const double f = eval(st, g_tmp);
    if (f < best_f) {
      best_f = f;
      best_start = st;
    }
  }
  if (!std::isfinite(best_f))
    throw std::runtime_error("fit_ml: no valid starting point");

  const OptResult opt = minimize(eval, best_start, 200);

  FittedModel m;
  m.family = family;
  m.mode = mode;
  m.covariate_names = names;
  m.dropped = d.dropped;
  m.n = d.n;
  m.iterations = opt.iters;
  m.log_lik = -opt.f;
  m.deviance = 2.0 * opt.f;

  bool interior = true;
  if (family == Family::gengamma && !prob.nu_link) {
    const double t = opt.x[prob.beta_n + prob.alpha_n];
    interior = std::fabs(t) < 8.0;  // logistic saturation = bound hit
  }
  m.converged = opt.g.lpNorm<Eigen::Infinity>() < 1e-6 &&
                opt.last_rel_change < 1e-10 && interior;

  // Covariance: FD Hessian on the standardised scale, transformed through
  // the block-diagonal destandardisation map (keeps Wald statistics exactly
  // invariant under column rescaling).
  const MatrixXd Hn = fd_hessian(eval, opt.x);
  MatrixXd cov_std = MatrixXd::Zero(prob.dim(), prob.dim());
  bool cov_ok = Hn.allFinite();
  if (cov_ok) {
    const auto ldlt = Hn.ldlt();
    cov_std = ldlt.solve(MatrixXd::Identity(prob.dim(), prob.dim()));
    cov_ok = cov_std.allFinite();
  }

  const MatrixXd A = destd_matrix(d);
  MatrixXd J = MatrixXd::Zero(prob.dim(), prob.dim());
  J.block(0, 0, prob.beta_n, prob.beta_n) = A;
  if (prob.sigma_link)
    J.block(prob.beta_n, prob.beta_n, prob.alpha_n, prob.alpha_n) = A;
  else
    J(prob.beta_n, prob.beta_n) = 1.0;
  if (prob.nu_n > 0) {
    const int off = prob.beta_n + prob.alpha_n;
    if (prob.nu_link)
      J.block(off, off, prob.nu_n, prob.nu_n) = A;
    else
      J(off, off) = dnu_dt(opt.x[off]);
  }
  MatrixXd cov_nat = MatrixXd::Zero(prob.dim(), prob.dim());
  if (cov_ok) cov_nat = J * cov_std * J.transpose();
  const VectorXd se_all =
      cov_ok ? VectorXd(cov_nat.diagonal().array().max(0.0).sqrt().matrix())
             : VectorXd(VectorXd::Zero(prob.dim()));

  m.beta = expand_full(d, A * opt.x.head(prob.beta_n));
  m.beta_se = expand_full(d, se_all.head(prob.beta_n));
  if (prob.sigma_link) {
    m.alpha = expand_full(d, A * opt.x.segment(prob.beta_n, prob.alpha_n));
    m.alpha_se = expand_full(d, se_all.segment(prob.beta_n, prob.alpha_n));
  } else {
    m.alpha = VectorXd::Constant(1, opt.x[prob.beta_n]);
    m.alpha_se = VectorXd::Constant(1, se_all[prob.beta_n]);
  }
  if (prob.nu_n > 0) {
    const int off = prob.beta_n + prob.alpha_n;
    if (prob.nu_link) {
      m.nu_coef = expand_full(d, A * opt.x.tail(prob.nu_n));
      m.nu_se = expand_full(d, se_all.tail(prob.nu_n));
    } else {
      m.nu_coef = VectorXd::Constant(1, nu_from_t(opt.x[off]));
      m.nu_se = VectorXd::Constant(1, se_all[off]);
    }
  }
  m.adj_pseudo_r2 = adj_r2_log_scale(m, X, y);
  return m;
}

namespace {

FitInit gg_init_from_gamma(const FittedModel& g) {
  FitInit init;
  init.beta = g.beta;
  init.alpha = g.alpha;
  init.nu_coef = VectorXd::Constant(1, 1.0);
  return init;
}

FitInit gg_init_from_weibull(const FittedModel& w) {
  // Weibull(shape s, scale beta) == gengamma natural (b=s, a=beta, k=1),
  // i.e. nu = s, sigma = 1/s, mu shifted by -ln Gamma(1/s + 1). With a
  // sigma link the mapping is exact only for constant sigma, so the fitted
  // sigma at x = 0 anchors an approximate start.
  FitInit init;
  init.beta = w.beta;
  const double shape =
      std::clamp(std::exp(w.alpha[0]), kNuLo * 1.05, kNuHi * 0.95);
  init.beta[0] -= std::lgamma(1.0 / shape + 1.0);
  if (w.alpha.size() > 1) {
    init.alpha = VectorXd::Zero(w.alpha.size());
    init.alpha[0] = -std::log(shape);
  } else {
    init.alpha = VectorXd::Constant(1, -std::log(shape));
  }
  init.nu_coef = VectorXd::Constant(1, shape);
  return init;
}

}  // namespace

std::map<Family, FittedModel> fit_families(
    const std::vector<Family>& families, LinkMode mode, const MatrixXd& X,
    const VectorXd& tau, const std::vector<std::string>& names) {
  std::map<Family, FittedModel> out;
  for (const Family f : families) {
    if (f == Family::gengamma) continue;
    const LinkMode m = mode == LinkMode::three_link ? LinkMode::two_link : mode;
    out.emplace(f, fit_ml(f, m, X, tau, names));
  }
  if (std::find(families.begin(), families.end(), Family::gengamma) !=
      families.end()) {
    std::vector<FitInit> inits;
    if (auto it = out.find(Family::gamma); it != out.end())
      inits.push_back(gg_init_from_gamma(it->second));
    if (auto it = out.find(Family::weibull); it != out.end())
      inits.push_back(gg_init_from_weibull(it->second));
    out.emplace(Family::gengamma, fit_ml(Family::gengamma, mode, X, tau,
                                         names, inits));
  }
  return out;
}

std::optional<Family> designate_best(
    const std::map<Family, FittedModel>& fits) {
  if (fits.empty()) return std::nullopt;
  const auto gg = fits.find(Family::gengamma);
  if (gg != fits.end() && !gg->second.converged &&
      fits.count(Family::lognormal))
    return Family::lognormal;
  std::optional<Family> best;
  double best_dev = std::numeric_limits<double>::infinity();
  for (const auto& [fam, fit] : fits) {
    if (!fit.converged) continue;
    if (fit.deviance < best_dev) {
      best_dev = fit.deviance;
      best = fam;
    }
  }
  if (!best && fits.count(Family::lognormal)) return Family::lognormal;
  return best;
}

std::vector<WaldTest> wald_tests(const FittedModel& model) {
  std::vector<WaldTest> out;
  const double df =
      model.via_ols ? model.n - model.n_active() - 1.0 : 0.0;
  for (int j = 0; j < model.beta.size(); ++j) {
    WaldTest w;
    if (model.beta_se[j] <= 0.0) {
      w.testable = false;
      w.t = 0.0;
      w.significant = false;
    } else {
      w.t = model.beta[j] / model.beta_se[j];
      w.significant = t_test_pvalue(w.t, df) < 0.05;
    }
    out.push_back(w);
  }
  return out;
}

double pseudo_r2(const FittedModel& model, const MatrixXd& X,
                 const VectorXd& tau) {
  return adj_r2_log_scale(model, X, log_of(tau));
}

ParamSet params_at(const FittedModel& model, const VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(model.covariate_names.size()))
    throw std::invalid_argument("params_at: covariate vector size mismatch");
  ParamSet ps;
  ps.family = model.family;
  double eta = model.beta[0];
  for (int j = 0; j < x.size(); ++j) eta += model.beta[j + 1] * x[j];
  ps.mu = model.family == Family::lognormal ? eta : std::exp(eta);
  if (model.alpha.size() == 1) {
    ps.sigma = std::exp(model.alpha[0]);
  } else {
    double zeta = model.alpha[0];
    for (int j = 0; j < x.size(); ++j) zeta += model.alpha[j + 1] * x[j];
    ps.sigma = std::exp(zeta);
  }
  if (model.family == Family::gengamma) {
    if (model.nu_coef.size() == 1) {
      ps.nu = model.nu_coef[0];
    } else {
      double nv = model.nu_coef[0];
      for (int j = 0; j < x.size(); ++j) nv += model.nu_coef[j + 1] * x[j];
      ps.nu = nv;
    }
  }
  return ps;
}

double conditional_mean(const FittedModel& model, const VectorXd& x) {
  return mean_variance(params_at(model, x)).first;
}

std::vector<UnitEffect> unit_change_effects(const FittedModel& model,
                                            const VectorXd& x0) {
  const int p = static_cast<int>(model.covariate_names.size());
  if (x0.size() != p)
    throw std::invalid_argument("unit_change_effects: x0 size mismatch");
  std::vector<UnitEffect> out(static_cast<size_t>(p));
  const ParamSet ps = params_at(model, x0);

  for (int j = 0; j < p; ++j) {
    UnitEffect& e = out[static_cast<size_t>(j)];
    const double bj = model.beta[j + 1];
    const double aj = model.alpha.size() > 1 ? model.alpha[j + 1] : 0.0;
    e.direction = bj > 0.0 ? 1 : (bj < 0.0 ? -1 : 0);

    switch (model.family) {
      case Family::lognormal: {
        const double s2 = ps.sigma * ps.sigma;
        const double mean = std::exp(ps.mu + 0.5 * s2);
        e.d_mean = mean * (bj + s2 * aj);
        const double e2m = std::exp(2.0 * ps.mu);
        const double var = e2m * (std::exp(2.0 * s2) - std::exp(s2));
        e.d_variance =
            2.0 * bj * var +
            2.0 * s2 * aj * e2m * (2.0 * std::exp(2.0 * s2) - std::exp(s2));
        break;
      }
      case Family::gamma: {
        e.d_mean = bj * ps.mu;
        e.d_variance =
            2.0 * (bj + aj) * ps.sigma * ps.sigma * ps.mu * ps.mu;
        break;
      }
      case Family::weibull:
      case Family::gengamma: {
        // Gamma-function factors make closed partials unwieldy; use central
        // differences through the moment formulas.
        const double h = 1e-6 * std::max(1.0, std::fabs(x0[j]));
        VectorXd xp = x0, xm = x0;
        xp[j] += h;
        xm[j] -= h;
        const auto mv_p = mean_variance(params_at(model, xp));
        const auto mv_m = mean_variance(params_at(model, xm));
        e.d_mean = (mv_p.first - mv_m.first) / (2.0 * h);
        e.d_variance = (mv_p.second - mv_m.second) / (2.0 * h);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON round trip.

namespace {
nlohmann::json vec_to_json(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vec_from_json(const nlohmann::json& a) {
  VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}
}  // namespace

std::string model_to_json(const FittedModel& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["family"] = family_name(m.family);
  j["link_mode"] = link_mode_name(m.mode);
  j["via_ols"] = m.via_ols;
  j["covariates"] = m.covariate_names;
  j["beta"] = vec_to_json(m.beta);
  j["beta_se"] = vec_to_json(m.beta_se);
  j["alpha"] = vec_to_json(m.alpha);
  j["alpha_se"] = vec_to_json(m.alpha_se);
  if (m.nu_coef.size() > 0) {
    j["nu"] = vec_to_json(m.nu_coef);
    j["nu_se"] = vec_to_json(m.nu_se);
  }
  j["dropped"] = m.dropped;
  j["log_likelihood"] = m.log_lik;
  j["deviance"] = m.deviance;
  j["adjusted_pseudo_r2"] = m.adj_pseudo_r2;
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["n"] = m.n;
  return j.dump(2);
}

FittedModel model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("model json: unsupported schema_version");
  FittedModel m;
  m.family = family_from_name(j.at("family").get<std::string>());
  m.mode = link_mode_from_name(j.at("link_mode").get<std::string>());
  m.via_ols = j.at("via_ols").get<bool>();
  m.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  m.beta = vec_from_json(j.at("beta"));
  m.beta_se = vec_from_json(j.at("beta_se"));
  m.alpha = vec_from_json(j.at("alpha"));
  m.alpha_se = vec_from_json(j.at("alpha_se"));
  if (j.contains("nu")) {
    m.nu_coef = vec_from_json(j.at("nu"));
    m.nu_se = vec_from_json(j.at("nu_se"));
  }
  m.dropped = j.at("dropped").get<std::vector<int>>();
  m.log_lik = j.at("log_likelihood").get<double>();
  m.deviance = j.at("deviance").get<double>();
  m.adj_pseudo_r2 = j.at("adjusted_pseudo_r2").get<double>();
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<int>();
  m.n = j.at("n").get<int>();
  return m;
}

}  // namespace lobres
