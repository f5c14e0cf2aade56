#include "lobres/lob.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lobres {

namespace {

bool parse_int(std::string_view s, int64_t& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_uint(std::string_view s, uint64_t& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

constexpr const char* kEventHeader =
    "timestamp_ms,order_id,side,price_ticks,size,kind";

}  // namespace

ParseReport parse_events(std::istream& in, bool strict) {
  ParseReport report;
  std::string line;
  size_t lineno = 0;

  if (!std::getline(in, line)) return report;  // empty file -> empty stream
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEventHeader)
    throw std::runtime_error("event csv: bad header, expected '" +
                             std::string(kEventHeader) + "'");

  int64_t last_ts = INT64_MIN;
  auto bad_row = [&](const std::string& why) {
    std::ostringstream oss;
    oss << "line " << lineno << ": " << why;
    if (strict) throw std::runtime_error("event csv: " + oss.str());
    report.warnings.push_back(oss.str());
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) {
      bad_row("expected 6 fields, got " + std::to_string(f.size()));
      continue;
    }
    LobEvent e;
    if (!parse_int(f[0], e.timestamp_ms)) {
      bad_row("bad timestamp '" + std::string(f[0]) + "'");
      continue;
    }
    if (!parse_uint(f[1], e.order_id)) {
      bad_row("bad order_id '" + std::string(f[1]) + "'");
      continue;
    }
    if (f[2] == "b")
      e.side = Side::bid;
    else if (f[2] == "a")
      e.side = Side::ask;
    else {
      bad_row("bad side '" + std::string(f[2]) + "'");
      continue;
    }
    if (!parse_int(f[3], e.price_ticks)) {
      bad_row("bad price '" + std::string(f[3]) + "'");
      continue;
    }
    if (!parse_int(f[4], e.size) || e.size < 0) {
      bad_row("bad size '" + std::string(f[4]) + "'");
      continue;
    }
    if (f[5] == "A")
      e.kind = EventKind::add;
    else if (f[5] == "C")
      e.kind = EventKind::cancel;
    else if (f[5] == "M")
      e.kind = EventKind::modify;
    else if (f[5] == "E")
      e.kind = EventKind::execute;
    else {
      bad_row("bad kind '" + std::string(f[5]) + "'");
      continue;
    }
    if (e.timestamp_ms < last_ts) {
      std::ostringstream oss;
      oss << "event csv: line " << lineno << ": non-monotone timestamp "
          << e.timestamp_ms << " after " << last_ts;
      throw std::runtime_error(oss.str());
    }
    if ((e.kind == EventKind::add || e.kind == EventKind::modify) &&
        e.price_ticks <= 0) {
      bad_row("non-positive price on add/modify");
      continue;
    }
    if (e.kind == EventKind::add && e.size <= 0) {
      bad_row("non-positive size on add");
      continue;
    }
    last_ts = e.timestamp_ms;
    report.events.push_back(e);
  }
  return report;
}

ParseReport parse_events_file(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event file: " + path);
  return parse_events(in, strict);
}

void write_events_csv(std::ostream& out, const std::vector<LobEvent>& events) {
  out << kEventHeader << "\n";
  for (const auto& e : events) {
    out << e.timestamp_ms << ',' << e.order_id << ','
        << (e.side == Side::bid ? 'b' : 'a') << ',' << e.price_ticks << ','
        << e.size << ',';
    switch (e.kind) {
      case EventKind::add: out << 'A'; break;
      case EventKind::cancel: out << 'C'; break;
      case EventKind::modify: out << 'M'; break;
      case EventKind::execute: out << 'E'; break;
    }
    out << '\n';
  }
}

void write_events_csv_file(const std::string& path,
                           const std::vector<LobEvent>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write event file: " + path);
  write_events_csv(out, events);
}

BookLevel* Book::find_level(Side side, int64_t price) {
  if (side == Side::bid) {
    auto it = bids_.find(price);
    return it == bids_.end() ? nullptr : &it->second;
  }
  auto it = asks_.find(price);
  return it == asks_.end() ? nullptr : &it->second;
}

RestingOrder Book::take_out(const Locator& loc, uint64_t id) {
  BookLevel* lvl = find_level(loc.side, loc.price_ticks);
  auto it = std::find_if(lvl->orders.begin(), lvl->orders.end(),
                         [&](const RestingOrder& o) { return o.order_id == id; });
  RestingOrder order = *it;
  lvl->total_size -= order.remaining_size;
  lvl->orders.erase(it);
  if (lvl->orders.empty()) {
    if (loc.side == Side::bid)
      bids_.erase(loc.price_ticks);
    else
      asks_.erase(loc.price_ticks);
  }
  locate_.erase(id);
  return order;
}

Book::ApplyResult Book::apply(const LobEvent& e, bool strict) {
  auto skip = [&](const std::string& why) -> ApplyResult {
    if (strict) throw std::runtime_error("book: " + why);
    return ApplyResult{false, why};
  };
  time_ms_ = std::max(time_ms_, e.timestamp_ms);

  switch (e.kind) {
    case EventKind::add: {
      if (locate_.count(e.order_id))
        return skip("duplicate add for order " + std::to_string(e.order_id));
      if (e.size <= 0 || e.price_ticks <= 0)
        return skip("add with non-positive size/price");
      RestingOrder o;
      o.order_id = e.order_id;
      o.side = e.side;
      o.price_ticks = e.price_ticks;
      o.remaining_size = e.size;
      o.entry_time_ms = e.timestamp_ms;
      auto& level = e.side == Side::bid ? bids_[e.price_ticks]
                                        : asks_[e.price_ticks];
      level.orders.push_back(o);
      level.total_size += o.remaining_size;
      locate_[e.order_id] = Locator{e.side, e.price_ticks};
      return {};
    }
    case EventKind::cancel: {
      auto it = locate_.find(e.order_id);
      if (it == locate_.end())
        return skip("cancel of unknown order " + std::to_string(e.order_id));
      take_out(it->second, e.order_id);
      return {};
    }
    case EventKind::modify: {
      auto it = locate_.find(e.order_id);
      if (it == locate_.end())
        return skip("modify of unknown order " + std::to_string(e.order_id));
      if (e.size <= 0 || e.price_ticks <= 0)
        return skip("modify with non-positive size/price");
      RestingOrder o = take_out(it->second, e.order_id);
      o.price_ticks = e.price_ticks;
      o.remaining_size = e.size;
      o.entry_time_ms = e.timestamp_ms;  // resubmitted: queue priority lost
      o.modified = true;
      o.last_modify_time_ms = e.timestamp_ms;
      auto& level = o.side == Side::bid ? bids_[o.price_ticks]
                                        : asks_[o.price_ticks];
      level.orders.push_back(o);
      level.total_size += o.remaining_size;
      locate_[o.order_id] = Locator{o.side, o.price_ticks};
      return {};
    }
    case EventKind::execute: {
      auto it = locate_.find(e.order_id);
      if (it == locate_.end())
        return skip("execute of unknown order " + std::to_string(e.order_id));
      const Locator loc = it->second;
      BookLevel* lvl = find_level(loc.side, loc.price_ticks);
      auto oit = std::find_if(
          lvl->orders.begin(), lvl->orders.end(),
          [&](const RestingOrder& o) { return o.order_id == e.order_id; });
      int64_t qty = e.size;
      ApplyResult res;
      if (qty > oit->remaining_size) {
        if (strict)
          throw std::runtime_error(
              "book: execute size exceeds remaining for order " +
              std::to_string(e.order_id));
        res.warning = "execute size clamped for order " +
                      std::to_string(e.order_id);
        qty = oit->remaining_size;
      }
      oit->remaining_size -= qty;
      lvl->total_size -= qty;
      if (oit->remaining_size == 0) take_out(loc, e.order_id);
      return res;
    }
  }
  return {};
}

std::optional<int64_t> Book::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return bids_.begin()->first;
}

std::optional<int64_t> Book::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

std::optional<int64_t> Book::spread_ticks() const {
  const auto bb = best_bid();
  const auto ba = best_ask();
  if (!bb || !ba) return std::nullopt;
  return *ba - *bb;
}

namespace {

template <typename Map>
LevelStats stats_over(const Map& levels, int n_levels, int64_t now_ms) {
  LevelStats s;
  int taken = 0;
  for (auto it = levels.begin(); it != levels.end() && taken < n_levels;
       ++it, ++taken) {
    for (const auto& o : it->second.orders) {
      ++s.order_count;
      s.total_volume += o.remaining_size;
      if (o.modified) ++s.modified_count;
      s.entry_time_sum += static_cast<double>(o.entry_time_ms);
    }
  }
  if (s.order_count > 0)
    s.mean_age_ms = static_cast<double>(now_ms) -
                    s.entry_time_sum / static_cast<double>(s.order_count);
  return s;
}

}  // namespace

LevelStats Book::level_stats(Side side, int n_levels, int64_t now_ms) const {
  if (n_levels < 1) throw std::invalid_argument("level_stats: n_levels >= 1");
  return side == Side::bid ? stats_over(bids_, n_levels, now_ms)
                           : stats_over(asks_, n_levels, now_ms);
}

void Book::check_invariants() const {
  const auto bb = best_bid();
  const auto ba = best_ask();
  if (bb && ba && !(*bb < *ba))
    throw std::logic_error("book invariant: crossed best quotes");
  auto check_side = [](const auto& levels) {
    for (const auto& [price, lvl] : levels) {
      if (lvl.orders.empty())
        throw std::logic_error("book invariant: empty level retained");
      int64_t sum = 0;
      for (const auto& o : lvl.orders) {
        if (o.remaining_size <= 0)
          throw std::logic_error("book invariant: non-positive resting size");
        if (o.price_ticks != price)
          throw std::logic_error("book invariant: order price mismatch");
        sum += o.remaining_size;
      }
      if (sum != lvl.total_size)
        throw std::logic_error("book invariant: level volume mismatch");
    }
  };
  check_side(bids_);
  check_side(asks_);
}

int Replay::frame_at(int64_t t_ms) const {
  // Last frame with t <= t_ms (binary search on the sorted frame times).
  int lo = 0, hi = static_cast<int>(frames.size());
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (frames[mid].t <= t_ms)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo - 1;
}

Replay replay_events(const std::vector<LobEvent>& events, int n_levels,
                     bool strict, Book* final_book,
                     std::vector<std::string>* warnings) {
  Replay replay;
  replay.n_levels = n_levels;
  replay.frames.reserve(events.size());
  Book book;
  double last_spread = 0.0;
  bool spread_defined = false;

  for (const auto& e : events) {
    const auto res = book.apply(e, strict);
    if (!res.warning.empty() && warnings) warnings->push_back(res.warning);
    if (!res.applied) continue;

    ReplayFrame f;
    f.t = e.timestamp_ms;
    f.kind = e.kind;
    f.side = e.side;
    const auto bs = book.level_stats(Side::bid, n_levels, e.timestamp_ms);
    const auto as = book.level_stats(Side::ask, n_levels, e.timestamp_ms);
    f.bid_count = bs.order_count;
    f.bid_volume = bs.total_volume;
    f.bid_modified = bs.modified_count;
    f.bid_entry_sum = bs.entry_time_sum;
    f.ask_count = as.order_count;
    f.ask_volume = as.total_volume;
    f.ask_modified = as.modified_count;
    f.ask_entry_sum = as.entry_time_sum;
    f.best_bid = book.best_bid();
    f.best_ask = book.best_ask();
    if (f.best_bid && f.best_ask) {
      last_spread = static_cast<double>(*f.best_ask - *f.best_bid);
      spread_defined = true;
    }
    f.last_spread = last_spread;
    f.spread_defined = spread_defined;
    replay.frames.push_back(f);
  }
  if (final_book) *final_book = std::move(book);
  return replay;
}

}  // namespace lobres
