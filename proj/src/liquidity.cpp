#include "lobres/liquidity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lobres {

namespace {

void append_point(std::vector<TimeValue>& pts, int64_t t, double v) {
  if (!pts.empty() && pts.back().t_ms == t) {
    pts.back().value = v;  // last value within the millisecond wins
    return;
  }
  pts.push_back(TimeValue{t, v});
}

void write_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

LiquiditySeries to_series(const EventSeries& es) {
  LiquiditySeries s;
  s.kind = es.kind;
  s.xlm_notional = es.xlm_notional;
  s.trading_window = es.trading_window;
  for (const auto& e : es.entries) append_point(s.points, e.t_ms, e.value);
  return s;
}

EventSeries spread_event_series(const Replay& replay, Window trading_window) {
  EventSeries es;
  es.kind = MeasureKind::spread;
  es.trading_window = trading_window;
  for (size_t i = 0; i < replay.frames.size(); ++i) {
    const auto& f = replay.frames[i];
    if (!f.best_bid || !f.best_ask) continue;  // one-sided: no point
    if (f.t < trading_window.start_ms || f.t > trading_window.end_ms) continue;
    es.entries.push_back(
        {static_cast<int>(i), f.t,
         static_cast<double>(*f.best_ask - *f.best_bid)});
  }
  return es;
}

bool xlm_of_book(const Book& book, double notional, double tick_size,
                 double& out_bps) {
  if (!(notional > 0.0)) throw std::invalid_argument("xlm: notional must be > 0");
  const auto bb = book.best_bid();
  const auto ba = book.best_ask();
  if (!bb || !ba) return false;

  // Buy walk: spend exactly `notional` on the ask side (fractional shares).
  double remaining = notional;
  double shares_bought = 0.0;
  for (const auto& [price, lvl] : book.asks()) {
    const double px = static_cast<double>(price) * tick_size;
    const double level_value = px * static_cast<double>(lvl.total_size);
    if (level_value >= remaining) {
      shares_bought += remaining / px;
      remaining = 0.0;
      break;
    }
    shares_bought += static_cast<double>(lvl.total_size);
    remaining -= level_value;
  }
  if (remaining > 0.0) return false;

  // Sell walk: raise exactly `notional` on the bid side.
  remaining = notional;
  double shares_sold = 0.0;
  for (const auto& [price, lvl] : book.bids()) {
    const double px = static_cast<double>(price) * tick_size;
    const double level_value = px * static_cast<double>(lvl.total_size);
    if (level_value >= remaining) {
      shares_sold += remaining / px;
      remaining = 0.0;
      break;
    }
    shares_sold += static_cast<double>(lvl.total_size);
    remaining -= level_value;
  }
  if (remaining > 0.0) return false;

  const double avg_buy = notional / shares_bought;
  const double avg_sell = notional / shares_sold;
  const double mid = 0.5 * static_cast<double>(*bb + *ba) * tick_size;
  out_bps = 1e4 * (avg_buy - avg_sell) / mid;
  return true;
}

EventSeries xlm_event_series(const std::vector<LobEvent>& events,
                             double notional, double tick_size,
                             Window trading_window, bool strict) {
  if (!(notional > 0.0)) throw std::invalid_argument("xlm: notional must be > 0");
  EventSeries es;
  es.kind = MeasureKind::xlm;
  es.xlm_notional = notional;
  es.trading_window = trading_window;
  Book book;
  int frame = -1;
  for (const auto& e : events) {
    const auto res = book.apply(e, strict);
    if (!res.applied) continue;
    ++frame;
    if (e.timestamp_ms < trading_window.start_ms ||
        e.timestamp_ms > trading_window.end_ms)
      continue;
    double bps = 0.0;
    if (xlm_of_book(book, notional, tick_size, bps)) {
      es.entries.push_back({frame, e.timestamp_ms, bps});
    } else if (book.best_bid() && book.best_ask()) {
      ++es.insufficient_depth_count;
    }
  }
  return es;
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty())
    throw std::invalid_argument("quantile: empty value set");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("quantile: q must be in (0,1)");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double w = h - std::floor(h);
  return values[lo] + w * (values[lo + 1] - values[lo]);
}

Threshold daily_threshold(const LiquiditySeries& series, double q) {
  if (series.points.empty())
    throw std::invalid_argument("daily_threshold: empty series");
  std::vector<double> vals;
  vals.reserve(series.points.size());
  for (const auto& p : series.points) vals.push_back(p.value);
  Threshold t;
  t.c = quantile_type7(std::move(vals), q);
  t.from_quantile = true;
  t.q = q;
  return t;
}

Threshold fixed_threshold(double c) {
  Threshold t;
  t.c = c;
  t.from_quantile = false;
  t.q = 0.0;
  return t;
}

std::vector<Interval> quintile_occupancy(const LiquiditySeries& series) {
  if (series.points.empty())
    throw std::invalid_argument("quintile_occupancy: empty series");
  const double c = daily_threshold(series, 0.8).c;
  std::vector<Interval> out;
  const Window w = series.trading_window;
  bool above = false;
  int64_t start = 0;
  for (const auto& p : series.points) {
    const int64_t t = std::max(p.t_ms, w.start_ms);
    if (t >= w.end_ms) break;
    const bool now_above = p.value > c;
    if (now_above && !above) {
      start = t;
      above = true;
    } else if (!now_above && above) {
      if (t > start) out.push_back({start, t});
      above = false;
    }
  }
  if (above && w.end_ms > start) out.push_back({start, w.end_ms});
  return out;
}

void write_series_csv(std::ostream& out, const LiquiditySeries& series) {
  out << "timestamp_ms,value\n";
  for (const auto& p : series.points) {
    out << p.t_ms << ',';
    write_double(out, p.value);
    out << '\n';
  }
}

void write_occupancy_csv(std::ostream& out, const std::vector<Interval>& iv) {
  out << "start_ms,end_ms\n";
  for (const auto& i : iv) out << i.start_ms << ',' << i.end_ms << '\n';
}

LiquiditySeries read_series_csv(std::istream& in, Window trading_window,
                                MeasureKind kind) {
  LiquiditySeries s;
  s.kind = kind;
  s.trading_window = trading_window;
  std::string line;
  if (!std::getline(in, line)) return s;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_ms,value")
    throw std::runtime_error(
        "series csv: bad header, expected 'timestamp_ms,value'");
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto pos = line.find(',');
    if (pos == std::string::npos)
      throw std::runtime_error("series csv: line " + std::to_string(lineno) +
                               ": expected 2 fields");
    try {
      const int64_t t = std::stoll(line.substr(0, pos));
      const double v = std::stod(line.substr(pos + 1));
      if (!s.points.empty() && t <= s.points.back().t_ms)
        throw std::runtime_error("series csv: line " + std::to_string(lineno) +
                                 ": non-increasing timestamp");
      s.points.push_back({t, v});
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("series csv: line " + std::to_string(lineno) +
                               ": bad number");
    }
  }
  return s;
}

}  // namespace lobres
