#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lobres/synth.hpp"
#include "lobres/pipeline.hpp"
#include "lobres/ted.hpp"
#include "oracles.hpp"

using namespace lobres;

namespace {

LiquiditySeries series_of(std::vector<TimeValue> pts, Window w) {
  LiquiditySeries s;
  s.points = std::move(pts);
  s.trading_window = w;
  return s;
}

}  // namespace

TEST_CASE("extract_teds: documented step fixture") {
  // L = [3,6,6,3,7,3] at t = 0..5 s, c = 5 -> (t=1s, tau=2s), (t=4s, tau=1s).
  const auto s = series_of({{0, 3}, {1000, 6}, {2000, 6}, {3000, 3},
                            {4000, 7}, {5000, 3}},
                           {0, 6000});
  const auto obs = extract_teds(s, fixed_threshold(5.0), {0, 6000});
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].t_ms == 1000);
  CHECK(obs[0].tau_ms == 2000);
  CHECK_FALSE(obs[0].censored);
  CHECK(obs[1].t_ms == 4000);
  CHECK(obs[1].tau_ms == 1000);
  CHECK_FALSE(obs[1].censored);
}

TEST_CASE("extract_teds: degenerate series") {
  const Window w{0, 5000};
  SUBCASE("entirely at or below the threshold") {
    const auto s = series_of({{0, 2}, {1000, 5}, {2000, 1}}, w);
    CHECK(extract_teds(s, fixed_threshold(5.0), w).empty());
  }
  SUBCASE("entirely above: one censored record spanning the window") {
    const auto s = series_of({{0, 9}, {2500, 8}}, w);
    const auto obs = extract_teds(s, fixed_threshold(5.0), w);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].t_ms == 0);
    CHECK(obs[0].tau_ms == 5000);
    CHECK(obs[0].censored);
  }
  SUBCASE("exceedance opens before the window start") {
    const auto s = series_of({{0, 9}, {2000, 1}}, Window{0, 5000});
    const auto obs = extract_teds(s, fixed_threshold(5.0), Window{500, 5000});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].t_ms == 500);
    CHECK(obs[0].tau_ms == 1500);
  }
}

TEST_CASE("extract_teds matches the millisecond linear scan on random series") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 60; ++rep) {
    std::vector<TimeValue> pts;
    int64_t t = static_cast<int64_t>(gen() % 40);
    const int n = 2 + static_cast<int>(gen() % 300);
    for (int i = 0; i < n; ++i) {
      pts.push_back({t, u(gen)});
      t += 1 + static_cast<int64_t>(gen() % 60);
    }
    const Window w{static_cast<int64_t>(gen() % 50), t + 30};
    const double c = 0.25 + 0.5 * u(gen);
    const auto got =
        extract_teds(series_of(pts, {0, w.end_ms}), fixed_threshold(c), w);
    const auto want = oracles::scan_teds(pts, c, w.start_ms, w.end_ms);
    REQUIRE(got.size() == want.size());
    int64_t total = 0;
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].t_ms == want[i].t);
      CHECK(got[i].tau_ms == want[i].tau);
      CHECK(got[i].censored == want[i].censored);
      total += got[i].tau_ms;
    }
    // Durations tile the time above the threshold exactly.
    int64_t above = 0;
    for (const auto& r : want) above += r.tau;
    CHECK(total == above);
  }
}

TEST_CASE("classify_trigger") {
  CHECK(classify_trigger(EventKind::execute, Side::ask) == Trigger::mobuy);
  CHECK(classify_trigger(EventKind::execute, Side::bid) == Trigger::mosell);
  CHECK(classify_trigger(EventKind::cancel, Side::ask) ==
        Trigger::cancel_or_other);
  CHECK(classify_trigger(EventKind::add, Side::bid) ==
        Trigger::cancel_or_other);
}

TEST_CASE("trigger attribution through a scripted book") {
  // Build a book whose spread crosses above the threshold through three
  // different mechanisms: ask execute (mobuy), bid cancel (other), and bid
  // execute (mosell). Spread threshold c = 3.
  std::vector<LobEvent> events = {
      {1000, 1, Side::bid, 100, 10, EventKind::add},
      {1000, 2, Side::bid, 98, 10, EventKind::add},
      {1000, 3, Side::ask, 102, 10, EventKind::add},   // spread 2
      {1000, 4, Side::ask, 105, 10, EventKind::add},
      {2000, 3, Side::ask, 102, 10, EventKind::execute},  // spread 5: mobuy
      {3000, 5, Side::ask, 102, 10, EventKind::add},      // spread 2
      {4000, 1, Side::bid, 0, 0, EventKind::cancel},      // spread 4: other
      {5000, 6, Side::bid, 100, 10, EventKind::add},      // spread 2
      {6000, 6, Side::bid, 100, 10, EventKind::execute},  // spread 4: mosell
      {7000, 7, Side::bid, 100, 10, EventKind::add},      // spread 2
  };
  const Replay r = replay_events(events, 5, true);
  const Window w{0, 10000};
  const auto es = spread_event_series(r, w);
  const auto obs = extract_teds_with_triggers(es, r, fixed_threshold(3.0), w);
  REQUIRE(obs.size() == 3);
  CHECK(obs[0].t_ms == 2000);
  CHECK(obs[0].trigger == Trigger::mobuy);
  CHECK(obs[1].t_ms == 4000);
  CHECK(obs[1].trigger == Trigger::cancel_or_other);
  CHECK(obs[2].t_ms == 6000);
  CHECK(obs[2].trigger == Trigger::mosell);
  for (const auto& o : obs) {
    const double mb = o.trigger == Trigger::mobuy ? 1.0 : 0.0;
    const double ms = o.trigger == Trigger::mosell ? 1.0 : 0.0;
    CHECK(mb + ms <= 1.0);
  }
}

TEST_CASE("triggered extraction coincides with plain extraction") {
  FlowConfig cfg;
  cfg.seed = 555;
  cfg.day_end_ms = cfg.day_start_ms + 30 * 60000;
  cfg.mean_gap_ms = 60;
  const auto events = gen_order_flow_day(cfg, 0);
  const Replay r = replay_events(events, 5);
  const Window w{cfg.day_start_ms + 60000, cfg.day_end_ms - 60000};
  const auto es = spread_event_series(r, {cfg.day_start_ms, cfg.day_end_ms});
  const auto series = to_series(es);
  const Threshold c = daily_threshold(series, 0.5);
  const auto plain = extract_teds(series, c, w);
  const auto with_trig = extract_teds_with_triggers(es, r, c, w);
  REQUIRE(plain.size() == with_trig.size());
  CHECK(plain.size() > 20);
  for (size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].t_ms == with_trig[i].t_ms);
    CHECK(plain[i].tau_ms == with_trig[i].tau_ms);
    CHECK(plain[i].censored == with_trig[i].censored);
  }
}

TEST_CASE("constant covariate path gives the geometric lag sum") {
  // One add far in the past on each side; every lag sample then sees the
  // same book, so the lag of the order-count covariate is count times
  // sum_{n=1..5} 0.75^n = 2.2880859375.
  std::vector<LobEvent> events = {
      {1000, 1, Side::bid, 100, 7, EventKind::add},
      {1000, 2, Side::ask, 103, 7, EventKind::add},
  };
  const Replay r = replay_events(events, 5);
  std::vector<TedObservation> obs = {{50000, 1500, false,
                                      Trigger::cancel_or_other}};
  const auto recs = build_covariates(r, obs, {}, CovariateSpec{}, {0, 100000});
  REQUIRE(recs.size() == 1);
  const auto& cv = recs[0].covariates;
  const double gsum = 2.2880859375;
  CHECK(cv[covariate_index("ask")] == 1.0);
  CHECK(cv[covariate_index("lask")] == doctest::Approx(gsum).epsilon(1e-15));
  CHECK(cv[covariate_index("lbid")] == doctest::Approx(gsum).epsilon(1e-15));
  CHECK(cv[covariate_index("laskVolume")] ==
        doctest::Approx(7.0 * gsum).epsilon(1e-15));
  CHECK(cv[covariate_index("lspreads")] ==
        doctest::Approx(3.0 * gsum).epsilon(1e-15));
  // Ages grow linearly: lag of age at t-n*1000 is (t - n*1000) - 1000.
  double expect = 0.0, wn = 1.0;
  for (int n = 1; n <= 5; ++n) {
    wn *= 0.75;
    expect += wn * (50000.0 - n * 1000.0 - 1000.0);
  }
  CHECK(cv[covariate_index("lbidAge")] ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("lag terms truncate before the covariate path exists") {
  std::vector<LobEvent> events = {
      {10000, 1, Side::bid, 100, 5, EventKind::add},
      {10000, 2, Side::ask, 101, 5, EventKind::add},
  };
  const Replay r = replay_events(events, 5);
  // T = 12s: lags at 11s, 10s exist; 9s, 8s, 7s predate the first frame.
  std::vector<TedObservation> obs = {{12000, 100, false,
                                      Trigger::cancel_or_other}};
  const auto recs = build_covariates(r, obs, {}, CovariateSpec{}, {0, 100000});
  const double w1 = 0.75, w2 = 0.75 * 0.75;
  CHECK(recs[0].covariates[covariate_index("lbid")] ==
        doctest::Approx(w1 + w2).epsilon(1e-15));
}

TEST_CASE("exceedance-history covariates") {
  Replay empty;
  const Window w{1000, 500000};
  std::vector<TedObservation> obs = {
      {2000, 700, false, Trigger::cancel_or_other},
      {4000, 250, false, Trigger::mobuy},
      {4600, 100, false, Trigger::mosell},
      {5300, 400, false, Trigger::cancel_or_other},
  };
  const auto recs = build_covariates(empty, obs, {1500, 3500, 4400, 4500},
                                     CovariateSpec{}, w);
  REQUIRE(recs.size() == 4);
  const int i_prev = covariate_index("prevexceed");
  const int i_last = covariate_index("timelast");
  const int i_avg = covariate_index("prevTEDavg");
  const int i_ind = covariate_index("indact");
  const int i_mb = covariate_index("mobuy");
  const int i_ms = covariate_index("mosell");

  // First record: empty history conventions.
  CHECK(recs[0].covariates[i_prev] == 0.0);
  CHECK(recs[0].covariates[i_last] == 1000.0);  // T1 - window start
  CHECK(recs[0].covariates[i_avg] == 0.0);
  CHECK(recs[0].covariates[i_ind] == 1.0);  // index event at 1500 in [1000,2000)

  // Second: previous start at 2000 is outside [3000, 4000).
  CHECK(recs[1].covariates[i_prev] == 0.0);
  CHECK(recs[1].covariates[i_last] == 2000.0);
  CHECK(recs[1].covariates[i_avg] ==
        doctest::Approx(std::log(700.0)).epsilon(1e-15));
  CHECK(recs[1].covariates[i_mb] == 1.0);
  CHECK(recs[1].covariates[i_ms] == 0.0);

  // Third: start 4000 is inside [3600, 4600); index events at 4400, 4500.
  CHECK(recs[2].covariates[i_prev] == 1.0);
  CHECK(recs[2].covariates[i_last] == 600.0);
  CHECK(recs[2].covariates[i_avg] ==
        doctest::Approx(0.5 * (std::log(700.0) + std::log(250.0))));
  CHECK(recs[2].covariates[i_ind] == 2.0);
  CHECK(recs[2].covariates[i_ms] == 1.0);

  // Fourth: of the starts at 4000 and 4600 only 4600 is inside [4300, 5300).
  CHECK(recs[3].covariates[i_prev] == 1.0);
  CHECK(recs[3].covariates[i_avg] ==
        doctest::Approx((std::log(700.0) + std::log(250.0) +
                         std::log(100.0)) / 3.0));
}

TEST_CASE("prevTEDavg averages only the last five") {
  Replay empty;
  std::vector<TedObservation> obs;
  for (int i = 0; i < 7; ++i)
    obs.push_back({10000 + i * 3000, 100 * (i + 1), false,
                   Trigger::cancel_or_other});
  const auto recs =
      build_covariates(empty, obs, {}, CovariateSpec{}, {0, 1000000});
  double expect = 0.0;
  for (int i = 1; i <= 5; ++i) expect += std::log(100.0 * (i + 1));
  CHECK(recs[6].covariates[covariate_index("prevTEDavg")] ==
        doctest::Approx(expect / 5.0).epsilon(1e-15));
}

TEST_CASE("ted csv round trip") {
  Replay empty;
  std::vector<TedObservation> obs = {
      {2000, 700, false, Trigger::mobuy},
      {9000, 1250, true, Trigger::cancel_or_other},
  };
  auto recs = build_covariates(empty, obs, {}, CovariateSpec{}, {0, 10250});
  recs[0].covariates[0] = 1.0 / 3.0;  // exercise full precision
  std::ostringstream out;
  write_ted_csv(out, recs);
  std::istringstream in(out.str());
  const auto back = read_ted_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].t_ms == 2000);
  CHECK(back[0].trigger == Trigger::mobuy);
  CHECK(back[0].covariates[0] == recs[0].covariates[0]);
  CHECK(back[1].censored);
  CHECK(back[1].tau_ms == 1250);
}

TEST_CASE("censored records are excluded from designs by default") {
  Replay empty;
  std::vector<TedObservation> obs = {
      {2000, 700, false, Trigger::cancel_or_other},
      {5000, 300, false, Trigger::mobuy},
      {9000, 1250, true, Trigger::cancel_or_other},
  };
  const auto recs = build_covariates(empty, obs, {}, CovariateSpec{},
                                     {0, 10250});
  Eigen::VectorXd tau;
  std::vector<int> idx = {covariate_index("prevTEDavg")};
  const Eigen::MatrixXd X_default =
      lobres::design_from_records(recs, idx, false, &tau);
  CHECK(X_default.rows() == 2);
  CHECK(tau.size() == 2);
  const Eigen::MatrixXd X_all =
      lobres::design_from_records(recs, idx, true, &tau);
  CHECK(X_all.rows() == 3);
  CHECK(tau[2] == 1250.0);
}

TEST_CASE("lag covariates are linear in the path") {
  // z(a*x + b*y) = a z(x) + b z(y) for step paths sampled at the same
  // instants; verified through the volume covariate by superposing books.
  std::vector<LobEvent> ex = {{1000, 1, Side::ask, 101, 3, EventKind::add}};
  std::vector<LobEvent> ey = {{1000, 1, Side::ask, 101, 11, EventKind::add}};
  std::vector<LobEvent> exy = {{1000, 1, Side::ask, 101, 2 * 3 + 5 * 11,
                                EventKind::add}};
  const CovariateSpec spec;
  const Window w{0, 60000};
  std::vector<TedObservation> obs = {{30000, 10, false,
                                      Trigger::cancel_or_other}};
  const int iv = covariate_index("laskVolume");
  const double zx = build_covariates(replay_events(ex, 5), obs, {}, spec,
                                     w)[0].covariates[iv];
  const double zy = build_covariates(replay_events(ey, 5), obs, {}, spec,
                                     w)[0].covariates[iv];
  const double zxy = build_covariates(replay_events(exy, 5), obs, {}, spec,
                                      w)[0].covariates[iv];
  CHECK(zxy == doctest::Approx(2.0 * zx + 5.0 * zy).epsilon(1e-12));
}
