#pragma once

// Independent reference implementations used to check the library: these
// deliberately avoid the production code paths (naive rebuilds, quadrature,
// millisecond scans) so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "lobres/lob.hpp"
#include "lobres/ted.hpp"

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson_step(const std::function<double(double)>& f, double a,
                           double b, double fa, double fb, double fm,
                           double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-11) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fb, fm, whole, tol, 48);
}

// Integral of g(tau) * pdf(tau) via the log substitution tau = e^s; the
// transformed integrand is smooth even when the density diverges at 0
// (generalised gamma with bk < 1). [lo, hi] should bracket the bulk (e.g.
// extreme quantiles); the flanking segments pick up what heavy tails leave
// outside it, each integrated separately so the bump is never skipped over.
inline double integrate_against_density(
    const std::function<double(double)>& g,
    const std::function<double(double)>& pdf, double lo, double hi,
    double tol = 1e-11) {
  const auto h = [&](double s) {
    const double t = std::exp(s);
    return g(t) * pdf(t) * t;
  };
  const double a = std::log(lo), b = std::log(hi);
  return integrate(h, a - 14.0, a, tol) + integrate(h, a, b, tol) +
         integrate(h, b, b + 14.0, tol);
}

// Bisection inverse of a monotone cdf on (lo, hi).
inline double invert_cdf(const std::function<double(double)>& cdf, double u,
                         double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h_rel = 1e-6) {
  const double h = h_rel * std::max(1.0, std::fabs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// --- naive book -------------------------------------------------------------
// Independent per-event rebuild: flat order table, no level bookkeeping.

struct NaiveOrder {
  lobres::Side side;
  int64_t price = 0;
  int64_t size = 0;
  int64_t entry = 0;
  bool modified = false;
  int64_t seq = 0;  // arrival order for queue position
};

struct NaiveBook {
  std::map<uint64_t, NaiveOrder> orders;
  int64_t seq = 0;

  void apply(const lobres::LobEvent& e) {
    using lobres::EventKind;
    switch (e.kind) {
      case EventKind::add:
        orders[e.order_id] =
            NaiveOrder{e.side, e.price_ticks, e.size, e.timestamp_ms, false,
                       seq++};
        break;
      case EventKind::cancel:
        orders.erase(e.order_id);
        break;
      case EventKind::modify: {
        auto it = orders.find(e.order_id);
        if (it == orders.end()) break;
        it->second.price = e.price_ticks;
        it->second.size = e.size;
        it->second.entry = e.timestamp_ms;
        it->second.modified = true;
        it->second.seq = seq++;
        break;
      }
      case EventKind::execute: {
        auto it = orders.find(e.order_id);
        if (it == orders.end()) break;
        it->second.size -= std::min(e.size, it->second.size);
        if (it->second.size <= 0) orders.erase(it);
        break;
      }
    }
  }

  // Prices with at least one resting order, best-first.
  std::vector<int64_t> level_prices(lobres::Side side) const {
    std::vector<int64_t> p;
    for (const auto& [id, o] : orders)
      if (o.side == side) p.push_back(o.price);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (side == lobres::Side::bid) std::reverse(p.begin(), p.end());
    return p;
  }

  // Brute-force stats over the n price levels nearest the midpoint.
  struct Stats {
    int64_t count = 0, volume = 0, modified = 0;
    double mean_age = 0.0;
  };
  Stats stats(lobres::Side side, int n_levels, int64_t now) const {
    Stats s;
    auto prices = level_prices(side);
    if (static_cast<int>(prices.size()) > n_levels) prices.resize(n_levels);
    double entry_sum = 0;
    for (const auto& [id, o] : orders) {
      if (o.side != side) continue;
      if (std::find(prices.begin(), prices.end(), o.price) == prices.end())
        continue;
      ++s.count;
      s.volume += o.size;
      if (o.modified) ++s.modified;
      entry_sum += static_cast<double>(o.entry);
    }
    if (s.count > 0)
      s.mean_age = static_cast<double>(now) - entry_sum / s.count;
    return s;
  }
};

// --- millisecond-scan TED oracle ---------------------------------------------
// Literal definition: evaluate the step function at every millisecond of the
// window and collect maximal runs strictly above the threshold.

struct ScanTed {
  int64_t t = 0, tau = 0;
  bool censored = false;
};

inline std::vector<ScanTed> scan_teds(const std::vector<lobres::TimeValue>& pts,
                                      double c, int64_t ws, int64_t we) {
  std::vector<ScanTed> out;
  size_t j = 0;
  bool have_v = false;
  double v = 0.0;
  bool in_run = false;
  int64_t run_start = 0;
  for (int64_t t = ws; t < we; ++t) {
    while (j < pts.size() && pts[j].t_ms <= t) {
      v = pts[j].value;
      have_v = true;
      ++j;
    }
    const bool above = have_v && v > c;
    if (above && !in_run) {
      in_run = true;
      run_start = t;
    } else if (!above && in_run) {
      out.push_back({run_start, t - run_start, false});
      in_run = false;
    }
  }
  if (in_run) out.push_back({run_start, we - run_start, true});
  return out;
}

}  // namespace oracles
