#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lobres/liquidity.hpp"
#include "lobres/lob.hpp"

// Threshold exceedance durations and their regression covariates.
//
// An exceedance starts at the first instant the (millisecond step-valued)
// liquidity measure is strictly above the threshold c after having been at
// or below it, and lasts until the first instant it is back at or below c.
// Exceedance intervals [T_i, T_i + tau_i) are disjoint and tile exactly the
// set {t : L_t > c} intersected with the observation window; an exceedance
// still open at the window end is emitted with censored = true.

namespace lobres {

enum class Trigger : uint8_t { mobuy, mosell, cancel_or_other };

const char* trigger_name(Trigger t);
Trigger trigger_from_name(const std::string& name);

// Classification of the event whose application pushed the measure above
// the threshold: an execute that removed ask-side volume is a market buy,
// one that removed bid-side volume is a market sell; everything else
// (cancels, adds, modifies) is cancel_or_other.
Trigger classify_trigger(EventKind kind, Side side);

struct TedObservation {
  int64_t t_ms = 0;    // exceedance start T_i
  int64_t tau_ms = 0;  // duration; > 0
  bool censored = false;
  Trigger trigger = Trigger::cancel_or_other;
};

// Covariate layout: 9 instantaneous book covariates, their 9 exponentially
// weighted lags (prefix 'l'), and 6 exceedance-history/activity covariates.
inline constexpr int kNumCovariates = 24;
const std::array<std::string, kNumCovariates>& covariate_names();
int covariate_index(const std::string& name);  // -1 when unknown

struct CovariateSpec {
  int n_levels = 5;               // book levels per side
  double lag_weight = 0.75;       // w
  int lag_count = 5;              // d
  int64_t lag_spacing_ms = 1000;  // Delta
  int64_t recent_window_ms = 1000;  // delta, for prevexceed
  int prev_ted_count = 5;           // prevTEDavg averaging depth
  int64_t index_activity_window_ms = 1000;
};

struct TedRecord {
  int64_t t_ms = 0;
  int64_t tau_ms = 0;
  bool censored = false;
  Trigger trigger = Trigger::cancel_or_other;
  std::array<double, kNumCovariates> covariates{};
};

// Extraction on a millisecond step series. The step function holds each
// point's value until the next point; before the first point the measure is
// treated as not exceeding. Intervals are clipped to `window` (closed left,
// open right); triggers are not available on this path.
std::vector<TedObservation> extract_teds(const LiquiditySeries& series,
                                         const Threshold& c, Window window);

// Extraction at event resolution: identical intervals to extract_teds on
// to_series(es), plus trigger classification from the crossing event (the
// last event inside the crossing millisecond that lifted the running value
// above c). When an exceedance was already open at the window start, the
// original crossing event still supplies the trigger.
std::vector<TedObservation> extract_teds_with_triggers(
    const EventSeries& es, const Replay& replay, const Threshold& c,
    Window window);

// Builds the 24-entry covariate vector for each observation. Instantaneous
// book covariates read the step-valued paths at exactly T_i; lag terms read
// them at T_i - n*Delta and are dropped (contribute nothing) where the path
// does not yet exist. The index activity stream may be empty (all-zero
// covariate). `window` supplies the timelast convention for the first
// record of the day: timelast = T_1 - window.start_ms.
std::vector<TedRecord> build_covariates(
    const Replay& replay, const std::vector<TedObservation>& observations,
    const std::vector<int64_t>& index_stream_ms, const CovariateSpec& spec,
    Window window);

// TED CSV: `T_ms,tau_ms,censored,trigger` followed by the 24 covariate
// columns in covariate_names() order.
void write_ted_csv(std::ostream& out, const std::vector<TedRecord>& records);
std::vector<TedRecord> read_ted_csv(std::istream& in);

}  // namespace lobres
