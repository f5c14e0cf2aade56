#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lobres/fit.hpp"

// Conditional duration quantile curves and surfaces: covariates are mapped
// through the fitted links to distribution parameters and the family
// quantile function is evaluated on a grid. For single-link models the
// covariates enter only the scale of the distribution, so quantile ratios
// across levels are covariate-free.

namespace lobres {

struct QuantileGrid {
  std::vector<std::string> varying;   // 1 or 2 covariate names
  std::vector<double> grid1, grid2;   // grid2 empty for curves
  Eigen::VectorXd base_x;             // fixed covariate vector
  std::vector<double> u_levels;
  // Values indexed [i1][i2][iu] flattened as (i1*max(1,|grid2|)+i2)*|u|+iu.
  std::vector<double> q;
  bool extrapolated = false;

  double at(size_t i1, size_t i2, size_t iu) const {
    const size_t g2 = grid2.empty() ? 1 : grid2.size();
    return q[(i1 * g2 + i2) * u_levels.size() + iu];
  }
};

// Evaluates Q(u; x) over a one-covariate grid. The model must have
// converged. `extrapolated` is set when any grid point lies outside
// [min,max] of the supplied observed range (pass an empty range to skip
// the check).
QuantileGrid quantile_curve(const FittedModel& model, int cov_index,
                            const std::vector<double>& grid,
                            const std::vector<double>& u_levels,
                            const Eigen::VectorXd& base_x,
                            const std::pair<double, double>* observed_range
                            = nullptr);

QuantileGrid quantile_surface(const FittedModel& model, int cov1, int cov2,
                              const std::vector<double>& grid1,
                              const std::vector<double>& grid2,
                              const std::vector<double>& u_levels,
                              const Eigen::VectorXd& base_x);

// Componentwise median of the design matrix rows: the "typical intra-day
// values" baseline.
Eigen::VectorXd column_medians(const Eigen::MatrixXd& X);

// Equally spaced grid over the [lo_pct, hi_pct] percentile span of column j.
std::vector<double> percentile_grid(const Eigen::MatrixXd& X, int j,
                                    int n_points, double lo_pct = 0.01,
                                    double hi_pct = 0.99);

// CSV export: `cov1,cov2,u,quantile_ms` (cov2 empty-valued for curves).
void write_quantile_csv(std::ostream& out, const QuantileGrid& g);

}  // namespace lobres
