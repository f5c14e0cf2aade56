#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lobres/dist.hpp"
#include "lobres/fit.hpp"
#include "lobres/lob.hpp"
#include "lobres/ted.hpp"

// Synthetic data in place of proprietary feeds: a zero-intelligence order
// flow simulator for end-to-end pipeline tests, and a direct duration
// sampler with known regression coefficients for statistical tests.
//
// Determinism: all draws come from a mt19937_64 seeded via splitmix64 from
// (seed, day); event generation uses integer arithmetic only, and duration
// sampling uses the documented transforms below, so identical configs give
// byte-identical outputs.

namespace lobres {

uint64_t splitmix64(uint64_t x);
uint64_t derive_seed(uint64_t seed, uint64_t stream);

// Small deterministic RNG wrapper: uniform doubles in [0,1), normals via
// Box-Muller, gamma via Marsaglia-Tsang (no std::*_distribution, whose
// algorithms vary across standard libraries).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  uint64_t next_u64() { return gen_(); }
  // Uniform integer in [0, n) by rejection-free modulo (n << 2^64).
  uint64_t next_below(uint64_t n) { return gen_() % n; }
  double next_u01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double next_normal();
  double next_gamma(double shape);  // scale 1

 private:
  std::mt19937_64 gen_;
};

// --- order flow -------------------------------------------------------------

struct FlowConfig {
  uint64_t seed = 1;
  int days = 1;
  int64_t day_start_ms = 8 * 3600 * 1000;        // 08:00
  int64_t day_end_ms = 16 * 3600 * 1000 + 30 * 60 * 1000;  // 16:30
  int64_t base_price_ticks = 10000;
  int64_t mean_gap_ms = 400;  // mean inter-event gap (geometric)
  // Action weights out of their sum.
  int w_add = 50, w_cancel = 24, w_execute = 16, w_modify = 10;
  int64_t min_size = 10, max_size = 200;
  int init_levels = 5, init_orders_per_level = 3;
  int max_depth_offset = 7;  // add placement range below/above the touch
  int max_resting_orders = 4000;
};

// One reproducible instrument-day of events; replays without strict-mode
// errors and keeps the book two-sided and uncrossed throughout.
std::vector<LobEvent> gen_order_flow_day(const FlowConfig& cfg, int day_index);

// --- duration samples -------------------------------------------------------

struct TedGenConfig {
  uint64_t seed = 1;
  int days = 1;
  int records_per_day = 1000;
  Family family = Family::lognormal;
  LinkMode mode = LinkMode::single;
  Eigen::VectorXd beta;      // p+1, intercept first
  Eigen::VectorXd alpha;     // p+1 (sigma link) or length 1 (= ln sigma)
  Eigen::VectorXd nu_coef;   // gengamma: p+1 or length 1 (= nu)
  int n_gaussian = 0;        // correlated standard-normal covariates
  double gaussian_corr = 0.3;
  int n_dummy = 0;           // Bernoulli covariates (mutually exclusive pair
                             // style when n_dummy == 2)
  double dummy_rate = 0.15;
  int max_retries = 1000;
};

struct TedSample {
  Eigen::MatrixXd X;
  Eigen::VectorXd tau;
  std::vector<std::string> names;
};

// Draws the design and responses from the exact family at link-mapped
// parameters. Covariate draws yielding invalid parameters are regenerated
// (bounded retries).
TedSample gen_ted_sample(const TedGenConfig& cfg, int day_index);

// Ground-truth JSON for a generated sample (schema_version 1), including
// the covariate slots the generated columns occupy in the TED CSV schema.
std::string ted_gen_truth_json(const TedGenConfig& cfg);

// Maps a generated sample onto the canonical TED CSV layout so it can be
// re-ingested by the fitting stages: gaussian columns occupy the named
// continuous covariate slots below (in order), a dummy pair occupies
// mobuy/mosell and sets the trigger consistently, responses are rounded to
// whole milliseconds (floored at 1), and rows get a synthetic 1 s clock.
std::vector<std::string> ted_sample_covariate_slots(const TedGenConfig& cfg);
std::vector<TedRecord> ted_sample_to_records(const TedSample& sample,
                                             const TedGenConfig& cfg);

// Family sample at fixed parameters; the gengamma path uses the same
// tau = a G^{1/b} identity as the quantile function.
double sample_response(Rng& rng, const ParamSet& ps);

}  // namespace lobres
