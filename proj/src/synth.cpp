#include "lobres/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lobres {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

double Rng::next_normal() {
  // Box-Muller; one value per call keeps the draw sequence stateless.
  double u1 = next_u01();
  while (u1 <= 0.0) u1 = next_u01();
  const double u2 = next_u01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::next_gamma(double shape) {
  if (!(shape > 0.0)) throw std::domain_error("next_gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1, then scale back by U^{1/shape}.
    const double g = next_gamma(shape + 1.0);
    double u = next_u01();
    while (u <= 0.0) u = next_u01();
    return g * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_u01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

namespace {

// Geometric gap with mean ~ mean_gap_ms, integer arithmetic only.
int64_t draw_gap(Rng& rng, int64_t mean_gap_ms) {
  if (mean_gap_ms <= 1) return 1;
  int64_t gap = 1;
  while (rng.next_below(static_cast<uint64_t>(mean_gap_ms)) != 0) ++gap;
  return gap;
}

struct LiveOrders {
  // Ids per side, in insertion order; removal swaps with the back so picks
  // stay O(1) and deterministic.
  std::vector<uint64_t> ids[2];

  void add(Side s, uint64_t id) { ids[static_cast<int>(s)].push_back(id); }
  void remove(Side s, uint64_t id) {
    auto& v = ids[static_cast<int>(s)];
    const auto it = std::find(v.begin(), v.end(), id);
    if (it != v.end()) {
      *it = v.back();
      v.pop_back();
    }
  }
  bool empty(Side s) const { return ids[static_cast<int>(s)].empty(); }
  size_t count(Side s) const { return ids[static_cast<int>(s)].size(); }
  uint64_t pick(Side s, Rng& rng) const {
    const auto& v = ids[static_cast<int>(s)];
    return v[rng.next_below(v.size())];
  }
};

}  // namespace

std::vector<LobEvent> gen_order_flow_day(const FlowConfig& cfg,
                                         int day_index) {
  if (cfg.mean_gap_ms <= 0 || cfg.min_size <= 0 ||
      cfg.max_size < cfg.min_size || cfg.base_price_ticks <= 10)
    throw std::invalid_argument("gen_order_flow_day: bad config");
  Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(day_index)));
  std::vector<LobEvent> events;
  Book book;
  LiveOrders live;
  uint64_t next_id = 1;

  auto emit = [&](LobEvent e) {
    book.apply(e, true);
    if (e.kind == EventKind::add) live.add(e.side, e.order_id);
    if (e.kind == EventKind::cancel) live.remove(e.side, e.order_id);
    events.push_back(e);
  };

  auto draw_size = [&]() {
    return cfg.min_size + static_cast<int64_t>(rng.next_below(
                              static_cast<uint64_t>(cfg.max_size - cfg.min_size + 1)));
  };

  // Seed a symmetric book at the open.
  for (int lvl = 1; lvl <= cfg.init_levels; ++lvl) {
    for (int k = 0; k < cfg.init_orders_per_level; ++k) {
      emit({cfg.day_start_ms, next_id++, Side::bid,
            cfg.base_price_ticks - lvl, draw_size(), EventKind::add});
      emit({cfg.day_start_ms, next_id++, Side::ask,
            cfg.base_price_ticks + lvl, draw_size(), EventKind::add});
    }
  }

  const int w_total = cfg.w_add + cfg.w_cancel + cfg.w_execute + cfg.w_modify;
  if (w_total <= 0) throw std::invalid_argument("gen_order_flow_day: zero weights");

  int64_t t = cfg.day_start_ms;
  while (true) {
    t += draw_gap(rng, cfg.mean_gap_ms);
    if (t >= cfg.day_end_ms) break;

    const Side side = rng.next_below(2) == 0 ? Side::bid : Side::ask;
    int64_t roll = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(w_total)));
    EventKind kind;
    if ((roll -= cfg.w_add) < 0)
      kind = EventKind::add;
    else if ((roll -= cfg.w_cancel) < 0)
      kind = EventKind::cancel;
    else if ((roll -= cfg.w_execute) < 0)
      kind = EventKind::execute;
    else
      kind = EventKind::modify;

    // Keep both sides populated: depleting actions become adds when the
    // side is down to its last order.
    if (kind != EventKind::add && live.count(side) <= 1)
      kind = EventKind::add;
    if (kind == EventKind::add &&
        static_cast<int>(live.count(Side::bid) + live.count(Side::ask)) >
            cfg.max_resting_orders)
      kind = EventKind::cancel;

    const auto bb = book.best_bid();
    const auto ba = book.best_ask();

    switch (kind) {
      case EventKind::add: {
        // Place inside the spread (narrowing) or at/behind the touch.
        int64_t price;
        const int64_t gap = *ba - *bb;
        const bool inside = gap >= 2 && rng.next_below(100) < 35;
        if (side == Side::bid) {
          if (inside)
            price = *bb + 1 +
                    static_cast<int64_t>(rng.next_below(
                        static_cast<uint64_t>(gap - 1)));
          else
            price = *bb - static_cast<int64_t>(rng.next_below(
                               static_cast<uint64_t>(cfg.max_depth_offset + 1)));
        } else {
          if (inside)
            price = *ba - 1 -
                    static_cast<int64_t>(rng.next_below(
                        static_cast<uint64_t>(gap - 1)));
          else
            price = *ba + static_cast<int64_t>(rng.next_below(
                               static_cast<uint64_t>(cfg.max_depth_offset + 1)));
        }
        if (price <= 0) price = 1;
        emit({t, next_id++, side, price, draw_size(), EventKind::add});
        break;
      }
      case EventKind::cancel: {
        const Side s = live.empty(side) ? other_side(side) : side;
        if (live.count(s) <= 1) break;  // never empty a side
        const uint64_t id = live.pick(s, rng);
        emit({t, id, s, 0, 0, EventKind::cancel});
        break;
      }
      case EventKind::execute: {
        // Hit the front order of the touch on `side`.
        if (live.count(side) <= 1) break;
        const BookLevel* touch = nullptr;
        if (side == Side::bid && !book.bids().empty())
          touch = &book.bids().begin()->second;
        if (side == Side::ask && !book.asks().empty())
          touch = &book.asks().begin()->second;
        if (!touch) break;
        const RestingOrder front = touch->orders.front();
        const bool full = rng.next_below(2) == 0;
        const int64_t qty =
            full ? front.remaining_size
                 : 1 + static_cast<int64_t>(rng.next_below(
                           static_cast<uint64_t>(front.remaining_size)));
        emit({t, front.order_id, side, front.price_ticks, qty,
              EventKind::execute});
        if (qty >= front.remaining_size) live.remove(side, front.order_id);
        break;
      }
      case EventKind::modify: {
        const Side s = live.empty(side) ? other_side(side) : side;
        const uint64_t id = live.pick(s, rng);
        const auto find_price = [&](Side ss) -> int64_t {
          if (ss == Side::bid) {
            for (const auto& [p, lvl] : book.bids())
              for (const auto& o : lvl.orders)
                if (o.order_id == id) return p;
          } else {
            for (const auto& [p, lvl] : book.asks())
              for (const auto& o : lvl.orders)
                if (o.order_id == id) return p;
          }
          return 0;
        };
        int64_t price = find_price(s);
        if (price == 0) break;
        // Size-only revision 70% of the time; otherwise step one tick
        // towards the touch, clamped to stay uncrossed.
        if (rng.next_below(100) >= 70) {
          if (s == Side::bid && price + 1 < *ba)
            price += 1;
          else if (s == Side::ask && price - 1 > *bb)
            price -= 1;
        }
        emit({t, id, s, price, draw_size(), EventKind::modify});
        break;
      }
    }
  }
  return events;
}

TedSample gen_ted_sample(const TedGenConfig& cfg, int day_index) {
  const int p = cfg.n_gaussian + cfg.n_dummy;
  if (cfg.beta.size() != p + 1)
    throw std::invalid_argument("gen_ted_sample: beta size must be p+1");
  const bool sigma_link = cfg.alpha.size() == p + 1;
  if (!sigma_link && cfg.alpha.size() != 1)
    throw std::invalid_argument("gen_ted_sample: alpha size must be 1 or p+1");
  const bool is_gg = cfg.family == Family::gengamma;
  if (is_gg && cfg.nu_coef.size() != 1 && cfg.nu_coef.size() != p + 1)
    throw std::invalid_argument("gen_ted_sample: nu size must be 1 or p+1");

  Rng rng(derive_seed(cfg.seed, 0x7ed55d16u + static_cast<uint64_t>(day_index)));
  TedSample out;
  out.X.resize(cfg.records_per_day, p);
  out.tau.resize(cfg.records_per_day);
  for (int j = 0; j < cfg.n_gaussian; ++j)
    out.names.push_back("g" + std::to_string(j + 1));
  for (int j = 0; j < cfg.n_dummy; ++j)
    out.names.push_back("d" + std::to_string(j + 1));

  const double rho = std::clamp(cfg.gaussian_corr, 0.0, 0.99);
  const double w_common = std::sqrt(rho);
  const double w_own = std::sqrt(1.0 - rho);

  for (int i = 0; i < cfg.records_per_day; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
      Eigen::VectorXd x(p);
      const double f = rng.next_normal();
      for (int j = 0; j < cfg.n_gaussian; ++j)
        x[j] = w_common * f + w_own * rng.next_normal();
      if (cfg.n_dummy == 2) {
        // Mutually exclusive indicator pair (market buy / market sell).
        const double u = rng.next_u01();
        x[cfg.n_gaussian] = u < cfg.dummy_rate ? 1.0 : 0.0;
        x[cfg.n_gaussian + 1] =
            (u >= cfg.dummy_rate && u < 2.0 * cfg.dummy_rate) ? 1.0 : 0.0;
      } else {
        for (int j = 0; j < cfg.n_dummy; ++j)
          x[cfg.n_gaussian + j] = rng.next_u01() < cfg.dummy_rate ? 1.0 : 0.0;
      }

      double eta = cfg.beta[0];
      for (int j = 0; j < p; ++j) eta += cfg.beta[j + 1] * x[j];
      double zeta = cfg.alpha[0];
      if (sigma_link)
        for (int j = 0; j < p; ++j) zeta += cfg.alpha[j + 1] * x[j];

      ParamSet ps;
      ps.family = cfg.family;
      ps.mu = cfg.family == Family::lognormal ? eta : std::exp(eta);
      ps.sigma = std::exp(zeta);
      if (is_gg) {
        double nv = cfg.nu_coef[0];
        if (cfg.nu_coef.size() == p + 1)
          for (int j = 0; j < p; ++j) nv += cfg.nu_coef[j + 1] * x[j];
        ps.nu = nv;
      }
      if (!std::isfinite(ps.mu) || !(ps.sigma > 0.0) ||
          !std::isfinite(ps.sigma) ||
          (cfg.family != Family::lognormal && !(ps.mu > 0.0)) ||
          (is_gg && !(ps.nu > 0.0)))
        continue;

      out.X.row(i) = x.transpose();
      out.tau[i] = sample_response(rng, ps);
      ok = std::isfinite(out.tau[i]) && out.tau[i] > 0.0;
    }
    if (!ok)
      throw std::runtime_error(
          "gen_ted_sample: could not draw valid parameters");
  }
  return out;
}

double sample_response(Rng& rng, const ParamSet& ps) {
  validate_params(ps);
  switch (ps.family) {
    case Family::lognormal:
      return std::exp(ps.mu + ps.sigma * rng.next_normal());
    case Family::gamma: {
      const double shape = 1.0 / (ps.sigma * ps.sigma);
      return rng.next_gamma(shape) * ps.sigma * ps.sigma * ps.mu;
    }
    case Family::weibull: {
      const double beta = ps.mu * std::exp(-std::lgamma(1.0 / ps.sigma + 1.0));
      double u = rng.next_u01();
      while (u <= 0.0) u = rng.next_u01();
      return beta * std::pow(-std::log(u), 1.0 / ps.sigma);
    }
    case Family::gengamma: {
      const double theta = 1.0 / (ps.sigma * ps.sigma * ps.nu * ps.nu);
      const double g = rng.next_gamma(theta);
      return ps.mu * std::pow(g / theta, 1.0 / ps.nu);
    }
  }
  return 0.0;
}

std::string ted_gen_truth_json(const TedGenConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["family"] = family_name(cfg.family);
  j["link_mode"] = link_mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["days"] = cfg.days;
  j["records_per_day"] = cfg.records_per_day;
  j["beta"] = std::vector<double>(cfg.beta.data(),
                                  cfg.beta.data() + cfg.beta.size());
  j["alpha"] = std::vector<double>(cfg.alpha.data(),
                                   cfg.alpha.data() + cfg.alpha.size());
  if (cfg.nu_coef.size() > 0)
    j["nu"] = std::vector<double>(cfg.nu_coef.data(),
                                  cfg.nu_coef.data() + cfg.nu_coef.size());
  j["n_gaussian"] = cfg.n_gaussian;
  j["gaussian_corr"] = cfg.gaussian_corr;
  j["n_dummy"] = cfg.n_dummy;
  j["dummy_rate"] = cfg.dummy_rate;
  j["covariate_slots"] = ted_sample_covariate_slots(cfg);
  return j.dump(2);
}

std::vector<std::string> ted_sample_covariate_slots(const TedGenConfig& cfg) {
  // Continuous slots for gaussian columns, then the indicator pair.
  static const char* kContinuous[] = {
      "spreads",  "prevTEDavg", "askVolume", "bidVolume", "bidAge",
      "askAge",   "lask",       "lbid",      "lspreads",  "ask",
      "bid",      "indact"};
  constexpr int kMaxContinuous =
      static_cast<int>(sizeof(kContinuous) / sizeof(kContinuous[0]));
  if (cfg.n_gaussian > kMaxContinuous)
    throw std::invalid_argument(
        "ted_sample_covariate_slots: too many gaussian covariates");
  if (cfg.n_dummy != 0 && cfg.n_dummy != 2)
    throw std::invalid_argument(
        "ted_sample_covariate_slots: dummy count must be 0 or 2");
  std::vector<std::string> slots;
  for (int j = 0; j < cfg.n_gaussian; ++j) slots.push_back(kContinuous[j]);
  if (cfg.n_dummy == 2) {
    slots.push_back("mobuy");
    slots.push_back("mosell");
  }
  return slots;
}

std::vector<TedRecord> ted_sample_to_records(const TedSample& sample,
                                             const TedGenConfig& cfg) {
  const auto slots = ted_sample_covariate_slots(cfg);
  std::vector<int> slot_idx;
  for (const auto& s : slots) slot_idx.push_back(covariate_index(s));
  std::vector<TedRecord> records;
  records.reserve(static_cast<size_t>(sample.tau.size()));
  int64_t t = (8 * 60 + 1) * 60000;  // synthetic clock from 08:01
  for (int i = 0; i < sample.tau.size(); ++i) {
    TedRecord r;
    r.t_ms = t;
    r.tau_ms = std::max<int64_t>(1, std::llround(sample.tau[i]));
    t += r.tau_ms + 1000;  // keeps the records non-overlapping
    r.censored = false;
    if (cfg.n_dummy == 2) {
      const bool buy = sample.X(i, cfg.n_gaussian) > 0.5;
      const bool sell = sample.X(i, cfg.n_gaussian + 1) > 0.5;
      r.trigger = buy ? Trigger::mobuy
                      : sell ? Trigger::mosell : Trigger::cancel_or_other;
    } else {
      r.trigger = Trigger::cancel_or_other;
    }
    for (size_t k = 0; k < slot_idx.size(); ++k)
      r.covariates[static_cast<size_t>(slot_idx[k])] =
          sample.X(i, static_cast<int>(k));
    records.push_back(r);
  }
  return records;
}

}  // namespace lobres
