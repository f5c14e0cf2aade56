#include "lobres/quantile_reg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "lobres/liquidity.hpp"

namespace lobres {

namespace {

using Eigen::VectorXd;

void check_model(const FittedModel& model, int cov_index) {
  if (!model.converged)
    throw std::invalid_argument("quantile grid: model did not converge");
  if (cov_index < 0 ||
      cov_index >= static_cast<int>(model.covariate_names.size()))
    throw std::invalid_argument("quantile grid: covariate index out of range");
}

void check_levels(const std::vector<double>& u) {
  if (u.empty()) throw std::invalid_argument("quantile grid: no levels");
  for (const double ui : u)
    if (!(ui > 0.0 && ui < 1.0))
      throw std::invalid_argument("quantile grid: levels must be in (0,1)");
}

}  // namespace

QuantileGrid quantile_curve(const FittedModel& model, int cov_index,
                            const std::vector<double>& grid,
                            const std::vector<double>& u_levels,
                            const VectorXd& base_x,
                            const std::pair<double, double>* observed_range) {
  check_model(model, cov_index);
  check_levels(u_levels);
  QuantileGrid g;
  g.varying = {model.covariate_names[static_cast<size_t>(cov_index)]};
  g.grid1 = grid;
  g.base_x = base_x;
  g.u_levels = u_levels;
  g.q.reserve(grid.size() * u_levels.size());
  VectorXd x = base_x;
  for (const double v : grid) {
    if (observed_range &&
        (v < observed_range->first || v > observed_range->second))
      g.extrapolated = true;
    x[cov_index] = v;
    const ParamSet ps = params_at(model, x);
    for (const double u : u_levels) g.q.push_back(quantile(ps, u));
  }
  return g;
}

QuantileGrid quantile_surface(const FittedModel& model, int cov1, int cov2,
                              const std::vector<double>& grid1,
                              const std::vector<double>& grid2,
                              const std::vector<double>& u_levels,
                              const VectorXd& base_x) {
  check_model(model, cov1);
  check_model(model, cov2);
  check_levels(u_levels);
  QuantileGrid g;
  g.varying = {model.covariate_names[static_cast<size_t>(cov1)],
               model.covariate_names[static_cast<size_t>(cov2)]};
  g.grid1 = grid1;
  g.grid2 = grid2;
  g.base_x = base_x;
  g.u_levels = u_levels;
  g.q.reserve(grid1.size() * grid2.size() * u_levels.size());
  VectorXd x = base_x;
  for (const double v1 : grid1) {
    x[cov1] = v1;
    for (const double v2 : grid2) {
      x[cov2] = v2;
      const ParamSet ps = params_at(model, x);
      for (const double u : u_levels) g.q.push_back(quantile(ps, u));
    }
  }
  return g;
}

VectorXd column_medians(const Eigen::MatrixXd& X) {
  VectorXd med(X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    std::vector<double> col(X.col(j).data(), X.col(j).data() + X.rows());
    med[j] = quantile_type7(std::move(col), 0.5);
  }
  return med;
}

std::vector<double> percentile_grid(const Eigen::MatrixXd& X, int j,
                                    int n_points, double lo_pct,
                                    double hi_pct) {
  if (n_points < 2) throw std::invalid_argument("percentile_grid: need >= 2");
  std::vector<double> col(X.col(j).data(), X.col(j).data() + X.rows());
  const double lo = quantile_type7(col, lo_pct);
  const double hi = quantile_type7(col, hi_pct);
  std::vector<double> grid(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i)
    grid[static_cast<size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
  return grid;
}

void write_quantile_csv(std::ostream& out, const QuantileGrid& g) {
  out << "cov1,cov2,u,quantile_ms\n";
  char buf[40];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  const bool surface = !g.grid2.empty();
  for (size_t i1 = 0; i1 < g.grid1.size(); ++i1) {
    const size_t g2 = surface ? g.grid2.size() : 1;
    for (size_t i2 = 0; i2 < g2; ++i2) {
      for (size_t iu = 0; iu < g.u_levels.size(); ++iu) {
        emit(g.grid1[i1]);
        out << ',';
        if (surface) emit(g.grid2[i2]);
        out << ',';
        emit(g.u_levels[iu]);
        out << ',';
        emit(g.at(i1, i2, iu));
        out << '\n';
      }
    }
  }
}

}  // namespace lobres
