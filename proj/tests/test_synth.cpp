#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lobres/fit.hpp"
#include "lobres/liquidity.hpp"
#include "lobres/synth.hpp"
#include "lobres/ted.hpp"
#include "oracles.hpp"

using namespace lobres;
using Eigen::VectorXd;

TEST_CASE("rng building blocks") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  double mean = 0.0, var = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.next_normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  // Gamma mean/variance: shape k has mean k, var k (scale 1).
  for (const double k : {0.4, 1.0, 3.7}) {
    Rng g(11);
    double m = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.next_gamma(k);
      m += x;
      s2 += x * x;
    }
    m /= n;
    s2 = s2 / n - m * m;
    CHECK(m == doctest::Approx(k).epsilon(0.02));
    CHECK(s2 == doctest::Approx(k).epsilon(0.05));
  }
}

TEST_CASE("order flow: determinism under a fixed seed") {
  FlowConfig cfg;
  cfg.seed = 31337;
  cfg.day_end_ms = cfg.day_start_ms + 60 * 60000;
  const auto a = gen_order_flow_day(cfg, 2);
  const auto b = gen_order_flow_day(cfg, 2);
  REQUIRE(a.size() == b.size());
  std::ostringstream ca, cb;
  write_events_csv(ca, a);
  write_events_csv(cb, b);
  CHECK(ca.str() == cb.str());
  // Different day index gives a different stream.
  const auto c = gen_order_flow_day(cfg, 3);
  std::ostringstream cc;
  write_events_csv(cc, c);
  CHECK(ca.str() != cc.str());
}

TEST_CASE("order flow: zero cancel/execute rates keep depth non-decreasing") {
  FlowConfig cfg;
  cfg.seed = 5;
  cfg.w_cancel = 0;
  cfg.w_execute = 0;
  cfg.w_modify = 0;
  cfg.day_end_ms = cfg.day_start_ms + 10 * 60000;
  const auto events = gen_order_flow_day(cfg, 0);
  Book book;
  int64_t prev_depth = 0;
  for (const auto& e : events) {
    book.apply(e, true);
    const int64_t depth = book.level_stats(Side::bid, 1000000, e.timestamp_ms)
                              .total_volume +
                          book.level_stats(Side::ask, 1000000, e.timestamp_ms)
                              .total_volume;
    CHECK(depth >= prev_depth);
    prev_depth = depth;
  }
}

TEST_CASE("order flow: replays strictly and stays two-sided/uncrossed") {
  FlowConfig cfg;
  cfg.seed = 99;
  cfg.day_end_ms = cfg.day_start_ms + 2 * 60 * 60000;
  cfg.mean_gap_ms = 150;
  const auto events = gen_order_flow_day(cfg, 1);
  Book book;
  for (const auto& e : events) book.apply(e, true);  // strict: throws on error
  book.check_invariants();
  const Replay r = replay_events(events, 5, true);
  // The first seeding add leaves the book one-sided for one frame; from the
  // second frame on both sides must stay populated and uncrossed.
  for (size_t i = 1; i < r.frames.size(); ++i) {
    const auto& f = r.frames[i];
    REQUIRE(f.best_bid.has_value());
    REQUIRE(f.best_ask.has_value());
    CHECK(*f.best_bid < *f.best_ask);
  }
}

TEST_CASE("order flow: a default day produces plenty of median-threshold TEDs") {
  FlowConfig cfg;
  cfg.seed = 2026;
  const auto events = gen_order_flow_day(cfg, 0);
  const Replay r = replay_events(events, 5, true);
  const Window day{cfg.day_start_ms, cfg.day_end_ms};
  const auto es = spread_event_series(r, day);
  const auto series = to_series(es);
  const Threshold c = daily_threshold(series, 0.5);
  const Window win{cfg.day_start_ms + 60000, cfg.day_end_ms - 60000};
  const auto obs = extract_teds(series, c, win);
  CHECK(obs.size() >= 100);
  // Non-degenerate spread: more than two distinct values.
  std::vector<double> vals;
  for (const auto& p : series.points) vals.push_back(p.value);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  CHECK(vals.size() >= 3);
}

TEST_CASE("ted sampler: seed determinism and shapes") {
  TedGenConfig cfg;
  cfg.seed = 1234;
  cfg.family = Family::weibull;
  cfg.n_gaussian = 3;
  cfg.n_dummy = 2;
  cfg.records_per_day = 500;
  cfg.beta = VectorXd::Zero(6);
  cfg.beta[0] = 1.0;
  cfg.alpha = VectorXd::Constant(1, std::log(1.2));
  const TedSample a = gen_ted_sample(cfg, 0);
  const TedSample b = gen_ted_sample(cfg, 0);
  CHECK(a.X == b.X);
  CHECK(a.tau == b.tau);
  CHECK(a.names.size() == 5);
  // Dummies are mutually exclusive.
  for (int i = 0; i < a.X.rows(); ++i)
    CHECK(a.X(i, 3) + a.X(i, 4) <= 1.0);
}

TEST_CASE("ted sampler: degenerate lognormal noise collapses to exp(beta0)") {
  TedGenConfig cfg;
  cfg.seed = 77;
  cfg.family = Family::lognormal;
  cfg.n_gaussian = 1;
  cfg.records_per_day = 200;
  cfg.beta = VectorXd::Zero(2);
  cfg.beta[0] = 2.0;
  cfg.alpha = VectorXd::Constant(1, std::log(1e-8));
  const TedSample s = gen_ted_sample(cfg, 0);
  for (int i = 0; i < s.tau.size(); ++i)
    CHECK(s.tau[i] == doctest::Approx(std::exp(2.0)).epsilon(1e-6));
}

TEST_CASE("ted sampler: gengamma with nu=1 is a gamma sample") {
  // Family nesting: evaluate the gamma log-likelihood of both samples at
  // the shared true parameters; they should be statistically alike.
  TedGenConfig gg;
  gg.seed = 500;
  gg.family = Family::gengamma;
  gg.n_gaussian = 0;
  gg.records_per_day = 20000;
  gg.beta = VectorXd::Constant(1, std::log(3.0));
  gg.alpha = VectorXd::Constant(1, std::log(0.8));
  gg.nu_coef = VectorXd::Constant(1, 1.0);
  TedGenConfig ga = gg;
  ga.family = Family::gamma;
  const TedSample sg = gen_ted_sample(gg, 0);
  const TedSample sa = gen_ted_sample(ga, 0);
  const ParamSet truth{Family::gamma, 3.0, 0.8, 1.0};
  double lg = 0.0, la = 0.0;
  for (int i = 0; i < sg.tau.size(); ++i) {
    lg += log_pdf(truth, sg.tau[i]);
    la += log_pdf(truth, sa.tau[i]);
  }
  // Mean log-likelihoods agree within Monte Carlo error.
  CHECK(lg / sg.tau.size() ==
        doctest::Approx(la / sa.tau.size()).epsilon(0.02));
}

TEST_CASE("ted sampler: moments match the closed forms within 3 MC SEs") {
  struct Case {
    Family fam;
    double sigma, nu;
  };
  for (const Case c : {Case{Family::lognormal, 0.6, 1.0},
                       Case{Family::gamma, 0.7, 1.0},
                       Case{Family::weibull, 1.3, 1.0},
                       Case{Family::gengamma, 0.8, 1.4}}) {
    TedGenConfig cfg;
    cfg.seed = 900 + static_cast<int>(c.fam);
    cfg.family = c.fam;
    cfg.n_gaussian = 0;
    cfg.records_per_day = 100000;
    cfg.beta = VectorXd::Constant(1, c.fam == Family::lognormal
                                         ? 1.0
                                         : std::log(4.0));
    cfg.alpha = VectorXd::Constant(1, std::log(c.sigma));
    if (c.fam == Family::gengamma)
      cfg.nu_coef = VectorXd::Constant(1, c.nu);
    const TedSample s = gen_ted_sample(cfg, 0);
    ParamSet ps;
    ps.family = c.fam;
    ps.mu = c.fam == Family::lognormal ? 1.0 : 4.0;
    ps.sigma = c.sigma;
    ps.nu = c.nu;
    const auto [want_m, want_v] = mean_variance(ps);
    const int n = static_cast<int>(s.tau.size());
    const double m = s.tau.mean();
    const double v = (s.tau.array() - m).square().sum() / (n - 1);
    const double se_m = std::sqrt(want_v / n);
    CHECK(std::fabs(m - want_m) < 3.0 * se_m);
    // SE of the sample variance via the fourth moment (estimated).
    const double m4 = (s.tau.array() - m).pow(4).sum() / n;
    const double se_v = std::sqrt((m4 - want_v * want_v) / n);
    CHECK(std::fabs(v - want_v) < 3.0 * se_v);
  }
}

TEST_CASE("sample-to-records mapping closes the schema loop") {
  TedGenConfig cfg;
  cfg.seed = 321;
  cfg.family = Family::gamma;
  cfg.n_gaussian = 2;
  cfg.n_dummy = 2;
  cfg.records_per_day = 4000;
  cfg.beta = VectorXd(5);
  cfg.beta << 6.2, 0.5, -0.4, 0.3, -0.25;  // millisecond-scale durations
  cfg.alpha = VectorXd::Constant(1, std::log(0.6));
  const TedSample sample = gen_ted_sample(cfg, 0);
  const auto records = ted_sample_to_records(sample, cfg);
  REQUIRE(records.size() == 4000);

  // Round-trip through the canonical CSV and refit on the named slots.
  std::ostringstream out;
  write_ted_csv(out, records);
  std::istringstream in(out.str());
  const auto back = read_ted_csv(in);
  const auto slots = ted_sample_covariate_slots(cfg);
  REQUIRE(slots == std::vector<std::string>{"spreads", "prevTEDavg", "mobuy",
                                            "mosell"});
  std::vector<int> idx;
  for (const auto& s : slots) idx.push_back(covariate_index(s));
  Eigen::MatrixXd X(back.size(), idx.size());
  Eigen::VectorXd tau(back.size());
  for (size_t i = 0; i < back.size(); ++i) {
    tau[static_cast<long>(i)] = static_cast<double>(back[i].tau_ms);
    for (size_t k = 0; k < idx.size(); ++k)
      X(static_cast<long>(i), static_cast<long>(k)) =
          back[i].covariates[static_cast<size_t>(idx[k])];
    // Trigger column consistency.
    CHECK(back[i].covariates[covariate_index("mobuy")] +
              back[i].covariates[covariate_index("mosell")] <=
          1.0);
  }
  const FittedModel m = fit_ml(Family::gamma, LinkMode::single, X, tau, slots);
  REQUIRE(m.converged);
  // Millisecond rounding perturbs things slightly; truth within ~4 SEs.
  for (int j = 0; j < 5; ++j)
    CHECK(std::fabs(m.beta[j] - cfg.beta[j]) <
          4.0 * m.beta_se[j] + 0.02);
}

TEST_CASE("truth json is valid and carries the coefficients") {
  TedGenConfig cfg;
  cfg.family = Family::gengamma;
  cfg.n_gaussian = 2;
  cfg.beta = VectorXd::Zero(3);
  cfg.alpha = VectorXd::Zero(1);
  cfg.nu_coef = VectorXd::Constant(1, 1.5);
  const std::string j = ted_gen_truth_json(cfg);
  CHECK(j.find("\"family\": \"gengamma\"") != std::string::npos);
  CHECK(j.find("\"nu\"") != std::string::npos);
  CHECK(j.find("schema_version") != std::string::npos);
}
