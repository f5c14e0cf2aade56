#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lobres/lob.hpp"

// Liquidity measures on the event clock, empirical thresholds, and the
// intraday top-quintile occupancy summary.
//
// Series are step-valued between events: a value holds from its timestamp
// until the next point (or the end of the trading window). That convention
// makes the exceedance-duration infimum well-defined on an event clock.

namespace lobres {

enum class MeasureKind { spread, xlm };

struct TimeValue {
  int64_t t_ms = 0;
  double value = 0.0;
};

struct LiquiditySeries {
  MeasureKind kind = MeasureKind::spread;
  double xlm_notional = 0.0;  // currency units; xlm only
  std::vector<TimeValue> points;  // times strictly increasing
  Window trading_window;
};

// Event-resolution series: one entry per applied event where the measure is
// defined, tagged with the frame index so the causing event is recoverable.
// Multiple entries may share a millisecond; to_series() coalesces them.
struct EventSeries {
  MeasureKind kind = MeasureKind::spread;
  double xlm_notional = 0.0;
  struct Entry {
    int frame_index = -1;
    int64_t t_ms = 0;
    double value = 0.0;
  };
  std::vector<Entry> entries;
  Window trading_window;
  int64_t insufficient_depth_count = 0;  // xlm walks that ran out of book
};

// Millisecond step series: keeps the last value of each millisecond.
LiquiditySeries to_series(const EventSeries& es);

// Spread in ticks after each event where both sides are quoted.
EventSeries spread_event_series(const Replay& replay, Window trading_window);

// Cost of buying then selling `notional` (currency units) by walking the
// visible book, in basis points of the quote midpoint. Points are emitted
// only when both walks complete within visible depth.
EventSeries xlm_event_series(const std::vector<LobEvent>& events,
                             double notional, double tick_size,
                             Window trading_window, bool strict = false);

// Round-trip cost of one book state; nullopt when a side is empty or depth
// is insufficient. Exposed for direct use and testing.
struct XlmResult {
  double bps = 0.0;
};
bool xlm_of_book(const Book& book, double notional, double tick_size,
                 double& out_bps);

// Type-7 empirical quantile (linear interpolation of order statistics).
double quantile_type7(std::vector<double> values, double q);

struct Threshold {
  double c = 0.0;
  bool from_quantile = true;
  double q = 0.5;  // meaningful when from_quantile
};

// c = empirical q-quantile of the series point values, q in (0,1).
Threshold daily_threshold(const LiquiditySeries& series, double q);
Threshold fixed_threshold(double c);

// Maximal intervals (closed left, open right) where the step function is
// strictly above the daily 0.8-quantile, clipped to the trading window.
struct Interval {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};
std::vector<Interval> quintile_occupancy(const LiquiditySeries& series);

// CSV exports: `timestamp_ms,value` and `start_ms,end_ms`.
void write_series_csv(std::ostream& out, const LiquiditySeries& series);
void write_occupancy_csv(std::ostream& out, const std::vector<Interval>& iv);
LiquiditySeries read_series_csv(std::istream& in, Window trading_window,
                                MeasureKind kind = MeasureKind::spread);

}  // namespace lobres
