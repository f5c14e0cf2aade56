#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lobres/fit.hpp"

// Best-subset search over covariates for the log-linear specification, and
// the multi-day aggregation tables built from per-day results.

namespace lobres {

struct SubsetResult {
  int size = 0;
  std::vector<int> indices;  // chosen covariates, ascending
  double adj_r2 = 0.0;
  std::vector<bool> significant;  // per chosen covariate, 5% partial t-test
};

// Exact RSS-minimising subset of each size v in {1..p} for the OLS model of
// ln(tau) on X (intercept always included), via branch-and-bound with the
// RSS of the full remaining candidate set as the node bound. Ties in RSS
// are broken towards the lexicographically smallest index set. Refuses
// p > 30: the exactness guarantee becomes impractical beyond that.
std::vector<SubsetResult> best_subsets(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& tau);

// The parsimonious covariate set used for the cross-family comparisons:
// prevTEDavg, spreads, prevexceed, mobuy, mosell, ask, bid, lask, lbid
// (as indices into covariate_names()).
std::vector<int> fixed_subset();

struct DailySelection {
  std::vector<SubsetResult> per_size;  // from best_subsets
  FittedModel full_model;              // OLS fit with all covariates
};

struct AggregateTables {
  // [size-1][covariate]: fraction of days the covariate is in the best
  // size-v model / is significant in it.
  std::vector<std::vector<double>> inclusion;
  std::vector<std::vector<double>> significance;
  // Per covariate over the daily full-model fits.
  std::vector<double> pct_significant;
  std::vector<double> pct_positive;
  int n_covariates = 0;
  int n_days = 0;
};

AggregateTables aggregate_daily(const std::vector<DailySelection>& days);

// CSV exports: heatmap rows M1..Mp over covariate columns; the sign table
// lists covariate, % significant, % positive.
void write_heatmap_csv(std::ostream& out,
                       const std::vector<std::vector<double>>& matrix,
                       const std::vector<std::string>& cov_names);
void write_sign_table_csv(std::ostream& out, const AggregateTables& tables,
                          const std::vector<std::string>& cov_names);

}  // namespace lobres
