#include "lobres/ted.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lobres {

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::mobuy: return "mobuy";
    case Trigger::mosell: return "mosell";
    case Trigger::cancel_or_other: return "cancel_or_other";
  }
  return "?";
}

Trigger trigger_from_name(const std::string& name) {
  if (name == "mobuy") return Trigger::mobuy;
  if (name == "mosell") return Trigger::mosell;
  if (name == "cancel_or_other") return Trigger::cancel_or_other;
  throw std::invalid_argument("unknown trigger: " + name);
}

Trigger classify_trigger(EventKind kind, Side side) {
  if (kind == EventKind::execute)
    return side == Side::ask ? Trigger::mobuy : Trigger::mosell;
  return Trigger::cancel_or_other;
}

const std::array<std::string, kNumCovariates>& covariate_names() {
  static const std::array<std::string, kNumCovariates> names = {
      "ask",          "bid",          "askVolume",   "bidVolume",
      "bidModified",  "askModified",  "bidAge",      "askAge",
      "spreads",      "lask",         "lbid",        "laskVolume",
      "lbidVolume",   "lbidModified", "laskModified", "lbidAge",
      "laskAge",      "lspreads",     "prevexceed",  "timelast",
      "prevTEDavg",   "indact",       "mobuy",       "mosell"};
  return names;
}

int covariate_index(const std::string& name) {
  const auto& names = covariate_names();
  for (int i = 0; i < kNumCovariates; ++i)
    if (names[i] == name) return i;
  return -1;
}

namespace {

// Raw maximal exceedance interval of the step function, before window
// clipping. end_ms = INT64_MAX while still open; crossing_frame = -1 when
// no event-level information is available.
struct RawInterval {
  int64_t start_ms = 0;
  int64_t end_ms = std::numeric_limits<int64_t>::max();
  int crossing_frame = -1;
};

std::vector<TedObservation> clip_intervals(
    const std::vector<RawInterval>& raw, Window window, const Replay* replay) {
  std::vector<TedObservation> out;
  for (const auto& r : raw) {
    const int64_t start = std::max(r.start_ms, window.start_ms);
    const bool open_at_end = r.end_ms >= window.end_ms;
    const int64_t end = open_at_end ? window.end_ms : r.end_ms;
    if (end <= start) continue;
    TedObservation obs;
    obs.t_ms = start;
    obs.tau_ms = end - start;
    obs.censored = open_at_end;
    if (replay && r.crossing_frame >= 0) {
      const auto& f = replay->frames[static_cast<size_t>(r.crossing_frame)];
      obs.trigger = classify_trigger(f.kind, f.side);
    }
    out.push_back(obs);
  }
  return out;
}

}  // namespace

std::vector<TedObservation> extract_teds(const LiquiditySeries& series,
                                         const Threshold& c, Window window) {
  std::vector<RawInterval> raw;
  bool above = false;
  for (const auto& p : series.points) {
    const bool now_above = p.value > c.c;
    if (now_above && !above) {
      raw.push_back({p.t_ms, std::numeric_limits<int64_t>::max(), -1});
      above = true;
    } else if (!now_above && above) {
      raw.back().end_ms = p.t_ms;
      above = false;
    }
  }
  return clip_intervals(raw, window, nullptr);
}

std::vector<TedObservation> extract_teds_with_triggers(
    const EventSeries& es, const Replay& replay, const Threshold& c,
    Window window) {
  std::vector<RawInterval> raw;
  bool above = false;          // state of the ms-final step function
  double running = 0.0;        // event-resolution value
  bool running_defined = false;

  size_t i = 0;
  const auto& entries = es.entries;
  while (i < entries.size()) {
    // One millisecond group [i, j).
    size_t j = i;
    int crossing = -1;
    while (j < entries.size() && entries[j].t_ms == entries[i].t_ms) {
      const bool was_above = running_defined && running > c.c;
      const bool is_above = entries[j].value > c.c;
      if (is_above && !was_above) crossing = entries[j].frame_index;
      running = entries[j].value;
      running_defined = true;
      ++j;
    }
    const bool final_above = entries[j - 1].value > c.c;
    if (final_above && !above) {
      raw.push_back({entries[i].t_ms, std::numeric_limits<int64_t>::max(),
                     crossing});
      above = true;
    } else if (!final_above && above) {
      raw.back().end_ms = entries[i].t_ms;
      above = false;
    }
    i = j;
  }
  return clip_intervals(raw, window, &replay);
}

namespace {

// Step-path sample of one instantaneous book covariate at time t; nullopt
// before the path exists.
std::optional<double> sample_book_covariate(const Replay& replay, int cov,
                                            int64_t t) {
  const int idx = replay.frame_at(t);
  if (idx < 0) return std::nullopt;
  const auto& f = replay.frames[static_cast<size_t>(idx)];
  switch (cov) {
    case 0: return static_cast<double>(f.ask_count);
    case 1: return static_cast<double>(f.bid_count);
    case 2: return static_cast<double>(f.ask_volume);
    case 3: return static_cast<double>(f.bid_volume);
    case 4: return static_cast<double>(f.bid_modified);
    case 5: return static_cast<double>(f.ask_modified);
    case 6:  // bidAge: ages grow linearly between events
      return f.bid_count > 0 ? static_cast<double>(t) -
                                   f.bid_entry_sum /
                                       static_cast<double>(f.bid_count)
                             : 0.0;
    case 7:
      return f.ask_count > 0 ? static_cast<double>(t) -
                                   f.ask_entry_sum /
                                       static_cast<double>(f.ask_count)
                             : 0.0;
    case 8:
      if (!f.spread_defined) return std::nullopt;
      return f.last_spread;
    default:
      throw std::logic_error("sample_book_covariate: bad index");
  }
}

}  // namespace

std::vector<TedRecord> build_covariates(
    const Replay& replay, const std::vector<TedObservation>& observations,
    const std::vector<int64_t>& index_stream_ms, const CovariateSpec& spec,
    Window window) {
  std::vector<TedRecord> records;
  records.reserve(observations.size());

  std::vector<double> prior_log_tau;  // ln(tau) of earlier records, in order

  for (size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    const int64_t t = obs.t_ms;
    TedRecord rec;
    rec.t_ms = obs.t_ms;
    rec.tau_ms = obs.tau_ms;
    rec.censored = obs.censored;
    rec.trigger = obs.trigger;

    // Instantaneous book covariates at T_i.
    for (int cov = 0; cov < 9; ++cov) {
      const auto v = sample_book_covariate(replay, cov, t);
      rec.covariates[static_cast<size_t>(cov)] = v.value_or(0.0);
    }

    // Exponentially weighted lags: z = sum_{n=1..d} w^n x(t - n*Delta),
    // with unavailable samples dropped from the sum.
    for (int cov = 0; cov < 9; ++cov) {
      double z = 0.0;
      double wn = 1.0;
      for (int n = 1; n <= spec.lag_count; ++n) {
        wn *= spec.lag_weight;
        const auto v =
            sample_book_covariate(replay, cov, t - n * spec.lag_spacing_ms);
        if (v) z += wn * *v;
      }
      rec.covariates[static_cast<size_t>(9 + cov)] = z;
    }

    // prevexceed: exceedance starts in [t - delta, t).
    int prev_count = 0;
    for (size_t j = i; j-- > 0;) {
      if (observations[j].t_ms < t - spec.recent_window_ms) break;
      if (observations[j].t_ms < t) ++prev_count;
    }
    rec.covariates[18] = static_cast<double>(prev_count);

    // timelast: time since the previous exceedance start; for the first
    // record of the day, time since the window start.
    rec.covariates[19] = static_cast<double>(
        i > 0 ? t - observations[i - 1].t_ms : t - window.start_ms);

    // prevTEDavg: mean of the last few ln(tau); 0 with no history.
    if (!prior_log_tau.empty()) {
      const size_t m = std::min<size_t>(prior_log_tau.size(),
                                        static_cast<size_t>(spec.prev_ted_count));
      double s = 0.0;
      for (size_t j = prior_log_tau.size() - m; j < prior_log_tau.size(); ++j)
        s += prior_log_tau[j];
      rec.covariates[20] = s / static_cast<double>(m);
    } else {
      rec.covariates[20] = 0.0;
    }

    // indact: index-stream events in [t - 1s, t).
    const auto lo = std::lower_bound(index_stream_ms.begin(),
                                     index_stream_ms.end(),
                                     t - spec.index_activity_window_ms);
    const auto hi =
        std::lower_bound(index_stream_ms.begin(), index_stream_ms.end(), t);
    rec.covariates[21] = static_cast<double>(hi - lo);

    rec.covariates[22] = obs.trigger == Trigger::mobuy ? 1.0 : 0.0;
    rec.covariates[23] = obs.trigger == Trigger::mosell ? 1.0 : 0.0;

    prior_log_tau.push_back(std::log(static_cast<double>(obs.tau_ms)));
    records.push_back(rec);
  }
  return records;
}

void write_ted_csv(std::ostream& out, const std::vector<TedRecord>& records) {
  out << "T_ms,tau_ms,censored,trigger";
  for (const auto& n : covariate_names()) out << ',' << n;
  out << '\n';
  char buf[40];
  for (const auto& r : records) {
    out << r.t_ms << ',' << r.tau_ms << ',' << (r.censored ? 1 : 0) << ','
        << trigger_name(r.trigger);
    for (const double v : r.covariates) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<TedRecord> read_ted_csv(std::istream& in) {
  std::vector<TedRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::vector<std::string> expect = {"T_ms", "tau_ms", "censored",
                                       "trigger"};
    for (const auto& n : covariate_names()) expect.push_back(n);
    std::vector<std::string> got;
    size_t start = 0;
    while (true) {
      const size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        got.push_back(line.substr(start));
        break;
      }
      got.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    for (size_t k = 0; k < std::max(expect.size(), got.size()); ++k) {
      const std::string e = k < expect.size() ? expect[k] : "<none>";
      const std::string g = k < got.size() ? got[k] : "<none>";
      if (e != g)
        throw std::runtime_error("ted csv: header column " +
                                 std::to_string(k + 1) + " is '" + g +
                                 "', expected '" + e + "'");
    }
  }
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (fields.size() != 4 + kNumCovariates)
      throw std::runtime_error("ted csv: line " + std::to_string(lineno) +
                               ": expected " +
                               std::to_string(4 + kNumCovariates) + " fields");
    TedRecord r;
    try {
      r.t_ms = std::stoll(fields[0]);
      r.tau_ms = std::stoll(fields[1]);
      r.censored = std::stoi(fields[2]) != 0;
      r.trigger = trigger_from_name(fields[3]);
      for (int c = 0; c < kNumCovariates; ++c)
        r.covariates[static_cast<size_t>(c)] =
            std::stod(fields[static_cast<size_t>(4 + c)]);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("ted csv: line " + std::to_string(lineno) +
                               ": bad field");
    }
    records.push_back(r);
  }
  return records;
}

}  // namespace lobres
