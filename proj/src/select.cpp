#include "lobres/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lobres/ted.hpp"

namespace lobres {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Subset RSS from centred cross-products: with an intercept always in the
// model, RSS(S) = Syy - s_Sy' (S_SS)^{-1} s_Sy.
struct CrossProducts {
  MatrixXd sxx;
  VectorXd sxy;
  double syy = 0.0;

  double rss(const std::vector<int>& subset) const {
    if (subset.empty()) return syy;
    const int k = static_cast<int>(subset.size());
    MatrixXd s(k, k);
    VectorXd v(k);
    for (int i = 0; i < k; ++i) {
      v[i] = sxy[subset[static_cast<size_t>(i)]];
      for (int j = 0; j < k; ++j)
        s(i, j) = sxx(subset[static_cast<size_t>(i)],
                      subset[static_cast<size_t>(j)]);
    }
    const VectorXd w = s.ldlt().solve(v);
    return syy - v.dot(w);
  }
};

struct BestEntry {
  double rss = std::numeric_limits<double>::infinity();
  std::vector<int> indices;
};

// Preference order: strictly smaller RSS wins; near-ties (within tol) go to
// the lexicographically smallest index set.
bool better(double rss, const std::vector<int>& idx, const BestEntry& cur,
            double tol) {
  if (rss < cur.rss - tol) return true;
  if (rss <= cur.rss + tol)
    return std::lexicographical_compare(idx.begin(), idx.end(),
                                        cur.indices.begin(),
                                        cur.indices.end());
  return false;
}

struct SearchState {
  const CrossProducts& cp;
  std::vector<BestEntry>& best;  // index v-1 for size v
  double tol;
  std::vector<int> order;  // candidate exploration order

  void dfs(std::vector<int>& in, const std::vector<int>& cand) {
    const int a = static_cast<int>(in.size());
    if (a > 0) {
      std::vector<int> sorted_in = in;
      std::sort(sorted_in.begin(), sorted_in.end());
      const double r = cp.rss(sorted_in);
      if (better(r, sorted_in, best[static_cast<size_t>(a - 1)], tol)) {
        best[static_cast<size_t>(a - 1)] = {r, sorted_in};
      }
    }
    if (cand.empty()) return;

    // Bound: no subset below this node has RSS under rss(in + all cand).
    std::vector<int> full = in;
    full.insert(full.end(), cand.begin(), cand.end());
    std::sort(full.begin(), full.end());
    const double bound = cp.rss(full);
    bool improvable = false;
    for (int v = a + 1; v <= a + static_cast<int>(cand.size()); ++v) {
      if (bound <= best[static_cast<size_t>(v - 1)].rss + tol) {
        improvable = true;
        break;
      }
    }
    if (!improvable) return;

    std::vector<int> rest(cand.begin() + 1, cand.end());
    in.push_back(cand[0]);
    dfs(in, rest);
    in.pop_back();
    dfs(in, rest);
  }
};

}  // namespace

std::vector<SubsetResult> best_subsets(const MatrixXd& X,
                                       const VectorXd& tau) {
  const int p = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  if (p > 30)
    throw std::invalid_argument(
        "best_subsets: p > 30 makes the exact search impractical");
  if (n <= p + 1) throw std::invalid_argument("best_subsets: need n > p+1");
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    if (!(tau[i] > 0.0))
      throw std::invalid_argument("best_subsets: responses must be > 0");
    y[i] = std::log(tau[i]);
  }

  CrossProducts cp;
  const VectorXd xm = X.colwise().mean();
  const double ym = y.mean();
  MatrixXd Xc = X.rowwise() - xm.transpose();
  VectorXd yc = y.array() - ym;
  cp.sxx = Xc.transpose() * Xc;
  cp.sxy = Xc.transpose() * yc;
  cp.syy = yc.squaredNorm();

  std::vector<BestEntry> best(static_cast<size_t>(p));
  SearchState st{cp, best, 1e-9 * std::max(cp.syy, 1e-300), {}};

  // Explore strong covariates first: better pruning, still deterministic.
  st.order.resize(static_cast<size_t>(p));
  std::iota(st.order.begin(), st.order.end(), 0);
  std::vector<double> gain(static_cast<size_t>(p), 0.0);
  for (int j = 0; j < p; ++j)
    gain[static_cast<size_t>(j)] =
        cp.sxx(j, j) > 0.0 ? cp.sxy[j] * cp.sxy[j] / cp.sxx(j, j) : 0.0;
  std::stable_sort(st.order.begin(), st.order.end(), [&](int a, int b) {
    return gain[static_cast<size_t>(a)] > gain[static_cast<size_t>(b)];
  });

  std::vector<int> in;
  st.dfs(in, st.order);

  std::vector<SubsetResult> out;
  out.reserve(static_cast<size_t>(p));
  for (int v = 1; v <= p; ++v) {
    const BestEntry& be = best[static_cast<size_t>(v - 1)];
    SubsetResult r;
    r.size = v;
    r.indices = be.indices;

    // Refit the chosen subset for the adjusted R^2 and significance flags.
    MatrixXd Xs(n, v);
    std::vector<std::string> names(static_cast<size_t>(v));
    for (int k = 0; k < v; ++k) {
      Xs.col(k) = X.col(be.indices[static_cast<size_t>(k)]);
      names[static_cast<size_t>(k)] = "x" + std::to_string(k);
    }
    const FittedModel m = fit_loglinear(Xs, tau, names);
    r.adj_r2 = m.adj_pseudo_r2;
    const auto tests = wald_tests(m);
    r.significant.resize(static_cast<size_t>(v));
    for (int k = 0; k < v; ++k)
      r.significant[static_cast<size_t>(k)] =
          tests[static_cast<size_t>(k + 1)].significant;  // skip intercept
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<int> fixed_subset() {
  static const char* kNames[] = {"prevTEDavg", "spreads", "prevexceed",
                                 "mobuy",      "mosell",  "ask",
                                 "bid",        "lask",    "lbid"};
  std::vector<int> idx;
  for (const char* n : kNames) idx.push_back(covariate_index(n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

AggregateTables aggregate_daily(const std::vector<DailySelection>& days) {
  if (days.empty())
    throw std::invalid_argument("aggregate_daily: need at least one day");
  AggregateTables t;
  t.n_days = static_cast<int>(days.size());
  t.n_covariates = static_cast<int>(days[0].per_size.size());
  const int p = t.n_covariates;
  t.inclusion.assign(static_cast<size_t>(p),
                     std::vector<double>(static_cast<size_t>(p), 0.0));
  t.significance.assign(static_cast<size_t>(p),
                        std::vector<double>(static_cast<size_t>(p), 0.0));
  t.pct_significant.assign(static_cast<size_t>(p), 0.0);
  t.pct_positive.assign(static_cast<size_t>(p), 0.0);

  for (const auto& day : days) {
    if (static_cast<int>(day.per_size.size()) != p)
      throw std::invalid_argument("aggregate_daily: inconsistent p across days");
    for (int v = 1; v <= p; ++v) {
      const auto& r = day.per_size[static_cast<size_t>(v - 1)];
      for (size_t k = 0; k < r.indices.size(); ++k) {
        const int j = r.indices[k];
        t.inclusion[static_cast<size_t>(v - 1)][static_cast<size_t>(j)] += 1.0;
        if (r.significant[k])
          t.significance[static_cast<size_t>(v - 1)][static_cast<size_t>(j)] +=
              1.0;
      }
    }
    const auto tests = wald_tests(day.full_model);
    for (int j = 0; j < p; ++j) {
      if (tests[static_cast<size_t>(j + 1)].significant)
        t.pct_significant[static_cast<size_t>(j)] += 1.0;
      if (day.full_model.beta[j + 1] > 0.0)
        t.pct_positive[static_cast<size_t>(j)] += 1.0;
    }
  }
  const double nd = static_cast<double>(t.n_days);
  for (int v = 0; v < p; ++v)
    for (int j = 0; j < p; ++j) {
      t.inclusion[static_cast<size_t>(v)][static_cast<size_t>(j)] /= nd;
      t.significance[static_cast<size_t>(v)][static_cast<size_t>(j)] /= nd;
    }
  for (int j = 0; j < p; ++j) {
    t.pct_significant[static_cast<size_t>(j)] *= 100.0 / nd;
    t.pct_positive[static_cast<size_t>(j)] *= 100.0 / nd;
  }
  return t;
}

void write_heatmap_csv(std::ostream& out,
                       const std::vector<std::vector<double>>& matrix,
                       const std::vector<std::string>& cov_names) {
  out << "subset_size";
  for (const auto& n : cov_names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (size_t v = 0; v < matrix.size(); ++v) {
    out << 'M' << (v + 1);
    for (const double x : matrix[v]) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_sign_table_csv(std::ostream& out, const AggregateTables& tables,
                          const std::vector<std::string>& cov_names) {
  out << "covariate,pct_significant,pct_positive\n";
  char buf[40];
  for (size_t j = 0; j < cov_names.size(); ++j) {
    out << cov_names[j];
    std::snprintf(buf, sizeof(buf), "%.17g", tables.pct_significant[j]);
    out << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", tables.pct_positive[j]);
    out << ',' << buf << '\n';
  }
}

}  // namespace lobres
