#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

// Order-event stream parsing and limit order book reconstruction.
//
// Prices are integer ticks (the tick size lives in config so there are no
// floating-point price keys), times are integer milliseconds since
// midnight, and ties within a millisecond are processed in file order.

namespace lobres {

enum class Side : uint8_t { bid, ask };
enum class EventKind : uint8_t { add, cancel, modify, execute };

inline Side other_side(Side s) { return s == Side::bid ? Side::ask : Side::bid; }

struct LobEvent {
  int64_t timestamp_ms = 0;
  uint64_t order_id = 0;
  Side side = Side::bid;
  int64_t price_ticks = 0;
  int64_t size = 0;
  EventKind kind = EventKind::add;
};

struct RestingOrder {
  uint64_t order_id = 0;
  Side side = Side::bid;
  int64_t price_ticks = 0;
  int64_t remaining_size = 0;
  int64_t entry_time_ms = 0;
  bool modified = false;
  std::optional<int64_t> last_modify_time_ms;
};

struct Window {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  int64_t length() const { return end_ms - start_ms; }
  bool contains(int64_t t) const { return t >= start_ms && t < end_ms; }
};

// --- event CSV ------------------------------------------------------------
//
// Schema: header `timestamp_ms,order_id,side,price_ticks,size,kind`,
// side in {b,a}, kind in {A,C,M,E}.

struct ParseReport {
  std::vector<LobEvent> events;
  std::vector<std::string> warnings;  // "line N: ..." for skipped rows
};

// Parses an event stream. Malformed rows and unknown-order references are
// skip-and-warn by default; strict mode turns them into errors.
// Non-monotone timestamps are always a hard error.
ParseReport parse_events(std::istream& in, bool strict = false);
ParseReport parse_events_file(const std::string& path, bool strict = false);

void write_events_csv(std::ostream& out, const std::vector<LobEvent>& events);
void write_events_csv_file(const std::string& path,
                           const std::vector<LobEvent>& events);

// --- book -----------------------------------------------------------------

struct LevelStats {
  int64_t order_count = 0;
  int64_t total_volume = 0;
  int64_t modified_count = 0;
  double mean_age_ms = 0.0;
  // Sum of entry times over the counted orders; lets callers re-evaluate
  // the mean age at instants between events (ages grow linearly in t).
  double entry_time_sum = 0.0;
};

// A price level: resting orders in time priority.
struct BookLevel {
  std::vector<RestingOrder> orders;
  int64_t total_size = 0;
};

// Reconstructed book. apply() mutates in place; it is the per-event
// transition of the immutable-snapshot model, and one Book serves one
// instrument-day sequentially.
class Book {
 public:
  struct ApplyResult {
    bool applied = true;
    std::string warning;  // non-empty when the event was skipped/clamped
  };

  // Event semantics:
  //   add      inserts a resting order, entry_time = event time
  //   modify   re-prices/re-sizes in place, sets modified = true and
  //            resets entry_time (the order is cancelled and resubmitted
  //            under the same id, losing queue priority)
  //   execute  decrements remaining size; partial fills keep entry_time
  //   cancel   removes the order
  // Empty levels vanish. In strict mode unknown ids, duplicate adds and
  // over-sized executes throw; otherwise they are skipped with a warning.
  ApplyResult apply(const LobEvent& e, bool strict = false);

  std::optional<int64_t> best_bid() const;
  std::optional<int64_t> best_ask() const;
  std::optional<int64_t> spread_ticks() const;

  // Statistics over the min(n_levels, available) levels closest to the
  // midpoint. mean_age is relative to `now_ms`; an empty side gives zeros.
  LevelStats level_stats(Side side, int n_levels, int64_t now_ms) const;

  // Levels in book order (bids price-descending, asks ascending).
  const std::map<int64_t, BookLevel, std::greater<int64_t>>& bids() const {
    return bids_;
  }
  const std::map<int64_t, BookLevel>& asks() const { return asks_; }

  int64_t time_ms() const { return time_ms_; }
  size_t resting_order_count() const { return locate_.size(); }

  // Invariant checks used by tests: level ordering, per-level volume sums,
  // uncrossed best quotes, positive remaining sizes.
  void check_invariants() const;

 private:
  struct Locator {
    Side side;
    int64_t price_ticks;
  };

  BookLevel* find_level(Side side, int64_t price);
  RestingOrder take_out(const Locator& loc, uint64_t id);

  std::map<int64_t, BookLevel, std::greater<int64_t>> bids_;
  std::map<int64_t, BookLevel> asks_;
  std::unordered_map<uint64_t, Locator> locate_;
  int64_t time_ms_ = 0;
};

// --- replay ---------------------------------------------------------------

// One frame per applied event: the level statistics needed to evaluate the
// book covariates at any instant t >= frame time (ages grow linearly
// between events, so the entry-time sums are stored instead of ages).
struct ReplayFrame {
  int64_t t = 0;
  EventKind kind = EventKind::add;
  Side side = Side::bid;
  // Stats over the first `n_levels` levels of each side.
  int64_t ask_count = 0, bid_count = 0;
  int64_t ask_volume = 0, bid_volume = 0;
  int64_t ask_modified = 0, bid_modified = 0;
  double ask_entry_sum = 0.0, bid_entry_sum = 0.0;
  std::optional<int64_t> best_bid, best_ask;
  double last_spread = 0.0;   // carried forward over one-sided gaps
  bool spread_defined = false;
};

struct Replay {
  std::vector<ReplayFrame> frames;
  int n_levels = 5;

  // Index of the last frame with t <= query, or -1 before the first frame.
  int frame_at(int64_t t_ms) const;
};

// Replays an event stream, recording one frame per event.
Replay replay_events(const std::vector<LobEvent>& events, int n_levels = 5,
                     bool strict = false, Book* final_book = nullptr,
                     std::vector<std::string>* warnings = nullptr);

}  // namespace lobres
