#include "lobres/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "lobres/quantile_reg.hpp"

namespace fs = std::filesystem;

namespace lobres {

namespace {

using nlohmann::json;

std::string day_dir_name(int day) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "day%03d", day);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

std::vector<int64_t> gen_index_stream(uint64_t seed, int day, int64_t n,
                                      Window day_span) {
  std::vector<int64_t> ts;
  if (n <= 0) return ts;
  Rng rng(derive_seed(seed, 0xabcd0000u + static_cast<uint64_t>(day)));
  ts.reserve(static_cast<size_t>(n));
  const uint64_t span = static_cast<uint64_t>(day_span.length());
  for (int64_t i = 0; i < n; ++i)
    ts.push_back(day_span.start_ms +
                 static_cast<int64_t>(rng.next_below(span)));
  std::sort(ts.begin(), ts.end());
  return ts;
}

std::vector<int64_t> read_index_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  std::string line;
  std::vector<int64_t> ts;
  if (!std::getline(in, line)) return ts;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_ms")
    throw std::runtime_error("index csv: bad header, expected 'timestamp_ms'");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ts.push_back(std::stoll(line));
  }
  if (!std::is_sorted(ts.begin(), ts.end()))
    throw std::runtime_error("index csv: timestamps must be sorted");
  return ts;
}

void write_index_csv(const fs::path& path, const std::vector<int64_t>& ts) {
  std::ofstream out(path);
  out << "timestamp_ms\n";
  for (const int64_t t : ts) out << t << '\n';
}

json selection_to_json(const DailySelection& sel) {
  json j;
  j["schema_version"] = 1;
  json per = json::array();
  for (const auto& r : sel.per_size) {
    json e;
    e["size"] = r.size;
    e["indices"] = r.indices;
    e["adj_r2"] = r.adj_r2;
    std::vector<int> sig;
    for (const bool b : r.significant) sig.push_back(b ? 1 : 0);
    e["significant"] = sig;
    per.push_back(e);
  }
  j["per_size"] = per;
  j["full_model"] = json::parse(model_to_json(sel.full_model));
  return j;
}

DailySelection selection_from_json(const json& j) {
  DailySelection sel;
  for (const auto& e : j.at("per_size")) {
    SubsetResult r;
    r.size = e.at("size").get<int>();
    r.indices = e.at("indices").get<std::vector<int>>();
    r.adj_r2 = e.at("adj_r2").get<double>();
    for (const int b : e.at("significant").get<std::vector<int>>())
      r.significant.push_back(b != 0);
    sel.per_size.push_back(std::move(r));
  }
  sel.full_model = model_from_json(j.at("full_model").dump());
  return sel;
}

}  // namespace

std::vector<int> RunConfig::fit_covariate_indices() const {
  switch (covariate_set) {
    case CovariateSet::full: {
      std::vector<int> all(kNumCovariates);
      for (int i = 0; i < kNumCovariates; ++i) all[static_cast<size_t>(i)] = i;
      return all;
    }
    case CovariateSet::fixed_subset:
      return fixed_subset();
    case CovariateSet::explicit_list: {
      std::vector<int> idx;
      for (const auto& name : explicit_covariates) {
        const int i = covariate_index(name);
        if (i < 0)
          throw std::invalid_argument("unknown covariate in config: " + name);
        idx.push_back(i);
      }
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
      return idx;
    }
  }
  return {};
}

std::vector<std::string> covariate_name_subset(
    const std::vector<int>& indices) {
  std::vector<std::string> names;
  names.reserve(indices.size());
  for (const int i : indices)
    names.push_back(covariate_names()[static_cast<size_t>(i)]);
  return names;
}

Eigen::MatrixXd design_from_records(const std::vector<TedRecord>& records,
                                    const std::vector<int>& cov_indices,
                                    bool include_censored,
                                    Eigen::VectorXd* tau_out) {
  std::vector<const TedRecord*> used;
  for (const auto& r : records)
    if (include_censored || !r.censored) used.push_back(&r);
  Eigen::MatrixXd X(used.size(), cov_indices.size());
  Eigen::VectorXd tau(used.size());
  for (size_t i = 0; i < used.size(); ++i) {
    tau[static_cast<Eigen::Index>(i)] =
        static_cast<double>(used[i]->tau_ms);
    for (size_t j = 0; j < cov_indices.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          used[i]->covariates[static_cast<size_t>(cov_indices[j])];
  }
  if (tau_out) *tau_out = tau;
  return X;
}

RunConfig run_config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 1) != 1)
    throw std::runtime_error("run config: unsupported schema_version");
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.out_dir = j.value("out", cfg.out_dir);
  if (j.contains("inputs")) {
    cfg.input_event_files = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("index_inputs"))
      cfg.input_index_files =
          j.at("index_inputs").get<std::vector<std::string>>();
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    cfg.flow.days = s.value("days", cfg.flow.days);
    cfg.flow.mean_gap_ms = s.value("mean_gap_ms", cfg.flow.mean_gap_ms);
    cfg.flow.base_price_ticks =
        s.value("base_price_ticks", cfg.flow.base_price_ticks);
    cfg.flow.day_start_ms = s.value("day_start_ms", cfg.flow.day_start_ms);
    cfg.flow.day_end_ms = s.value("day_end_ms", cfg.flow.day_end_ms);
    cfg.flow.w_add = s.value("w_add", cfg.flow.w_add);
    cfg.flow.w_cancel = s.value("w_cancel", cfg.flow.w_cancel);
    cfg.flow.w_execute = s.value("w_execute", cfg.flow.w_execute);
    cfg.flow.w_modify = s.value("w_modify", cfg.flow.w_modify);
    cfg.flow.min_size = s.value("min_size", cfg.flow.min_size);
    cfg.flow.max_size = s.value("max_size", cfg.flow.max_size);
    cfg.index_events_per_day =
        s.value("index_events_per_day", cfg.index_events_per_day);
  }
  if (j.contains("measure")) {
    const std::string m = j.at("measure").get<std::string>();
    if (m == "spread")
      cfg.measure = MeasureKind::spread;
    else if (m == "xlm")
      cfg.measure = MeasureKind::xlm;
    else
      throw std::runtime_error("run config: unknown measure " + m);
  }
  cfg.xlm_notional = j.value("xlm_notional", cfg.xlm_notional);
  cfg.tick_size = j.value("tick_size", cfg.tick_size);
  cfg.strict = j.value("strict", cfg.strict);
  cfg.threshold_q = j.value("threshold_q", cfg.threshold_q);
  if (j.contains("window")) {
    cfg.window.start_ms = j.at("window").value("start_ms", cfg.window.start_ms);
    cfg.window.end_ms = j.at("window").value("end_ms", cfg.window.end_ms);
  }
  if (j.contains("families")) {
    cfg.families.clear();
    for (const auto& f : j.at("families"))
      cfg.families.push_back(family_from_name(f.get<std::string>()));
  }
  cfg.link_mode = link_mode_from_name(j.value("link_mode", "single"));
  if (j.contains("covariates")) {
    const auto& c = j.at("covariates");
    if (c.is_string()) {
      const std::string s = c.get<std::string>();
      if (s == "full")
        cfg.covariate_set = CovariateSet::full;
      else if (s == "fixed_subset")
        cfg.covariate_set = CovariateSet::fixed_subset;
      else
        throw std::runtime_error("run config: unknown covariate set " + s);
    } else {
      cfg.covariate_set = CovariateSet::explicit_list;
      cfg.explicit_covariates = c.get<std::vector<std::string>>();
    }
  }
  cfg.include_censored = j.value("include_censored", cfg.include_censored);
  cfg.subset_search = j.value("subset_search", cfg.subset_search);
  if (j.contains("surface")) {
    const auto& s = j.at("surface");
    cfg.surface.cov1 = s.value("cov1", cfg.surface.cov1);
    cfg.surface.cov2 = s.value("cov2", cfg.surface.cov2);
    if (s.contains("levels"))
      cfg.surface.u_levels = s.at("levels").get<std::vector<double>>();
    cfg.surface.grid = s.value("grid", cfg.surface.grid);
  }

  if (!(cfg.threshold_q > 0.0 && cfg.threshold_q < 1.0))
    throw std::runtime_error("run config: threshold_q must be in (0,1)");
  if (cfg.window.start_ms >= cfg.window.end_ms)
    throw std::runtime_error("run config: empty window");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg = run_config_from_json_text(read_text_file(path));
  if (const char* v = std::getenv("LOBRES_SEED"))
    cfg.seed = std::strtoull(v, nullptr, 10);
  if (const char* v = std::getenv("LOBRES_JOBS")) cfg.jobs = std::atoi(v);
  if (const char* v = std::getenv("LOBRES_OUT")) cfg.out_dir = v;
  if (const char* v = std::getenv("LOBRES_THRESHOLD_Q"))
    cfg.threshold_q = std::atof(v);
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  // Execution parameters (out directory, worker count) are deliberately
  // not echoed: outputs are a pure function of the content inputs below.
  json j;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  if (!cfg.input_event_files.empty()) {
    j["inputs"] = cfg.input_event_files;
    if (!cfg.input_index_files.empty())
      j["index_inputs"] = cfg.input_index_files;
  } else {
    j["synth"] = {{"days", cfg.flow.days},
                  {"mean_gap_ms", cfg.flow.mean_gap_ms},
                  {"base_price_ticks", cfg.flow.base_price_ticks},
                  {"day_start_ms", cfg.flow.day_start_ms},
                  {"day_end_ms", cfg.flow.day_end_ms},
                  {"w_add", cfg.flow.w_add},
                  {"w_cancel", cfg.flow.w_cancel},
                  {"w_execute", cfg.flow.w_execute},
                  {"w_modify", cfg.flow.w_modify},
                  {"min_size", cfg.flow.min_size},
                  {"max_size", cfg.flow.max_size},
                  {"index_events_per_day", cfg.index_events_per_day}};
  }
  j["measure"] = cfg.measure == MeasureKind::spread ? "spread" : "xlm";
  j["xlm_notional"] = cfg.xlm_notional;
  j["tick_size"] = cfg.tick_size;
  j["strict"] = cfg.strict;
  j["threshold_q"] = cfg.threshold_q;
  j["window"] = {{"start_ms", cfg.window.start_ms},
                 {"end_ms", cfg.window.end_ms}};
  json fams = json::array();
  for (const Family f : cfg.families) fams.push_back(family_name(f));
  j["families"] = fams;
  j["link_mode"] = link_mode_name(cfg.link_mode);
  switch (cfg.covariate_set) {
    case CovariateSet::full: j["covariates"] = "full"; break;
    case CovariateSet::fixed_subset: j["covariates"] = "fixed_subset"; break;
    case CovariateSet::explicit_list:
      j["covariates"] = cfg.explicit_covariates;
      break;
  }
  j["include_censored"] = cfg.include_censored;
  j["subset_search"] = cfg.subset_search;
  j["surface"] = {{"cov1", cfg.surface.cov1},
                  {"cov2", cfg.surface.cov2},
                  {"levels", cfg.surface.u_levels},
                  {"grid", cfg.surface.grid}};
  return j.dump(2);
}

DayResult process_day(const RunConfig& cfg, int day_index) {
  DayResult res;
  res.day = day_index;
  const fs::path day_dir =
      fs::path(cfg.out_dir) / "days" / day_dir_name(day_index);
  fs::create_directories(day_dir / "models");

  // 1. Events: load or simulate.
  std::vector<LobEvent> events;
  std::vector<int64_t> index_stream;
  if (cfg.input_event_files.empty()) {
    events = gen_order_flow_day(cfg.flow, day_index);
    write_events_csv_file((day_dir / "events.csv").string(), events);
    index_stream =
        gen_index_stream(cfg.seed, day_index, cfg.index_events_per_day,
                         Window{cfg.flow.day_start_ms, cfg.flow.day_end_ms});
    if (!index_stream.empty())
      write_index_csv(day_dir / "index.csv", index_stream);
  } else {
    ParseReport parsed = parse_events_file(
        cfg.input_event_files[static_cast<size_t>(day_index)], cfg.strict);
    events = std::move(parsed.events);
    if (!parsed.warnings.empty()) {
      std::ofstream warn(day_dir / "warnings.txt");
      for (const auto& w : parsed.warnings) warn << w << '\n';
    }
    if (static_cast<size_t>(day_index) < cfg.input_index_files.size())
      index_stream = read_index_csv(
          cfg.input_index_files[static_cast<size_t>(day_index)]);
  }
  if (events.empty()) throw std::runtime_error("day has no events");

  const Window day_span{events.front().timestamp_ms,
                        std::max(events.back().timestamp_ms + 1,
                                 cfg.window.end_ms)};

  // 2. Replay and liquidity series.
  const Replay replay = replay_events(events, cfg.covariates.n_levels,
                                      cfg.strict);
  EventSeries es;
  if (cfg.measure == MeasureKind::spread)
    es = spread_event_series(replay, day_span);
  else
    es = xlm_event_series(events, cfg.xlm_notional, cfg.tick_size, day_span,
                          cfg.strict);
  const LiquiditySeries full_series = to_series(es);
  {
    std::ofstream out(day_dir / "liquidity.csv");
    write_series_csv(out, full_series);
    std::ofstream occ(day_dir / "occupancy.csv");
    write_occupancy_csv(occ, quintile_occupancy(full_series));
  }

  // 3. Threshold from the analysis window, then extraction.
  EventSeries windowed = es;
  windowed.entries.clear();
  for (const auto& e : es.entries)
    if (e.t_ms >= cfg.window.start_ms && e.t_ms < cfg.window.end_ms)
      windowed.entries.push_back(e);
  const LiquiditySeries win_series = to_series(windowed);
  if (win_series.points.empty())
    throw std::runtime_error("no liquidity points inside the window");
  const Threshold thr = daily_threshold(win_series, cfg.threshold_q);
  const auto obs =
      extract_teds_with_triggers(es, replay, thr, cfg.window);
  const auto records =
      build_covariates(replay, obs, index_stream, cfg.covariates, cfg.window);
  res.n_records = static_cast<int>(records.size());
  for (const auto& r : records) res.n_censored += r.censored ? 1 : 0;
  {
    std::ofstream out(day_dir / "ted.csv");
    write_ted_csv(out, records);
  }

  // 4. Fits on the configured covariate subset.
  const auto fit_idx = cfg.fit_covariate_indices();
  const auto fit_names = covariate_name_subset(fit_idx);
  Eigen::VectorXd tau;
  const Eigen::MatrixXd X =
      design_from_records(records, fit_idx, cfg.include_censored, &tau);
  if (X.rows() <= static_cast<Eigen::Index>(fit_idx.size()) + 1)
    throw std::runtime_error("too few records (" + std::to_string(X.rows()) +
                             ") for " + std::to_string(fit_idx.size()) +
                             " covariates");
  res.fits = fit_families(cfg.families, cfg.link_mode, X, tau, fit_names);
  res.best = designate_best(res.fits);
  for (const auto& [fam, model] : res.fits) {
    write_text_file(day_dir / "models" /
                        (std::string(family_name(fam)) + "_" +
                         link_mode_name(model.mode) + ".json"),
                    model_to_json(model));
  }

  // 5. Quantile surfaces for converged fits.
  const int c1 = covariate_index(cfg.surface.cov1);
  const int c2 = covariate_index(cfg.surface.cov2);
  auto find_local = [&](int global) {
    for (size_t k = 0; k < fit_idx.size(); ++k)
      if (fit_idx[k] == global) return static_cast<int>(k);
    return -1;
  };
  const int l1 = c1 >= 0 ? find_local(c1) : -1;
  const int l2 = c2 >= 0 ? find_local(c2) : -1;
  if (l1 >= 0 && l2 >= 0 && l1 != l2) {
    const Eigen::VectorXd base = column_medians(X);
    const auto g1 = percentile_grid(X, l1, cfg.surface.grid);
    const auto g2 = percentile_grid(X, l2, cfg.surface.grid);
    for (const auto& [fam, model] : res.fits) {
      if (!model.converged) continue;
      const QuantileGrid qs = quantile_surface(model, l1, l2, g1, g2,
                                               cfg.surface.u_levels, base);
      std::ofstream out(day_dir / (std::string(family_name(fam)) +
                                   "_surface.csv"));
      write_quantile_csv(out, qs);
    }
  }

  // 6. Best-subset selection on the full covariate set (log-linear spec).
  if (cfg.subset_search) {
    std::vector<int> all(kNumCovariates);
    for (int i = 0; i < kNumCovariates; ++i) all[static_cast<size_t>(i)] = i;
    Eigen::VectorXd tau_all;
    const Eigen::MatrixXd X_all =
        design_from_records(records, all, cfg.include_censored, &tau_all);
    if (X_all.rows() > kNumCovariates + 1) {
      res.selection.per_size = best_subsets(X_all, tau_all);
      res.selection.full_model = fit_loglinear(
          X_all, tau_all, covariate_name_subset(all));
      res.has_selection = true;
      write_text_file(day_dir / "selection.json",
                      selection_to_json(res.selection).dump(2));
    }
  }

  res.ok = true;
  return res;
}

namespace {

void write_report_tables(const fs::path& out_root,
                         const std::vector<DayResult>& days,
                         RunReport& report) {
  const fs::path rep = out_root / "report";
  fs::create_directories(rep);

  // Deviance comparison: share of days each family was designated best.
  std::map<Family, int> counts;
  int days_with_fits = 0;
  for (const auto& d : days) {
    if (!d.ok || d.fits.empty()) continue;
    ++days_with_fits;
    if (d.best) counts[*d.best] += 1;
    for (const auto& [fam, m] : d.fits)
      if (m.converged) report.converged_count[fam] += 1;
  }
  report.lowest_deviance_count = counts;
  {
    std::ofstream out(rep / "deviance_table.csv");
    out << "family,days_lowest_deviance,pct\n";
    char buf[40];
    for (const Family f : {Family::lognormal, Family::gamma, Family::weibull,
                           Family::gengamma}) {
      const int c = counts.count(f) ? counts.at(f) : 0;
      const double pct =
          days_with_fits > 0 ? 100.0 * c / days_with_fits : 0.0;
      std::snprintf(buf, sizeof(buf), "%.17g", pct);
      out << family_name(f) << ',' << c << ',' << buf << '\n';
    }
  }

  // Adjusted pseudo-R^2 distribution summary per family.
  {
    std::ofstream out(rep / "r2_summary.csv");
    out << "family,n,min,q25,median,q75,max\n";
    char buf[40];
    for (const Family f : {Family::lognormal, Family::gamma, Family::weibull,
                           Family::gengamma}) {
      std::vector<double> r2;
      for (const auto& d : days) {
        const auto it = d.fits.find(f);
        if (d.ok && it != d.fits.end() && it->second.converged)
          r2.push_back(it->second.adj_pseudo_r2);
      }
      if (r2.empty()) continue;
      std::sort(r2.begin(), r2.end());
      auto q = [&](double p) {
        return r2.size() == 1 ? r2[0] : quantile_type7(r2, p);
      };
      out << family_name(f) << ',' << r2.size();
      for (const double v : {r2.front(), q(0.25), q(0.5), q(0.75), r2.back()}) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  }

  // Selection heatmaps and the significance/sign table.
  std::vector<DailySelection> sels;
  for (const auto& d : days)
    if (d.ok && d.has_selection) sels.push_back(d.selection);
  if (!sels.empty()) {
    const auto tables = aggregate_daily(sels);
    std::vector<std::string> names(covariate_names().begin(),
                                   covariate_names().end());
    {
      std::ofstream out(rep / "heatmap_inclusion.csv");
      write_heatmap_csv(out, tables.inclusion, names);
    }
    {
      std::ofstream out(rep / "heatmap_significance.csv");
      write_heatmap_csv(out, tables.significance, names);
    }
    {
      std::ofstream out(rep / "sign_table.csv");
      write_sign_table_csv(out, tables, names);
    }
  }

  // Run summary + error manifest.
  json manifest = json::array();
  for (const auto& d : days)
    if (!d.ok)
      manifest.push_back({{"day", d.day}, {"error", d.error}});
  if (!manifest.empty())
    write_text_file(rep / "error_manifest.json",
                    json{{"schema_version", 1}, {"errors", manifest}}.dump(2));

  json summary;
  summary["schema_version"] = 1;
  summary["days_total"] = report.days_total;
  summary["days_failed"] = report.days_failed;
  json conv;
  for (const auto& [fam, c] : report.converged_count)
    conv[family_name(fam)] = c;
  summary["converged"] = conv;
  json best;
  for (const auto& [fam, c] : report.lowest_deviance_count)
    best[family_name(fam)] = c;
  summary["lowest_deviance"] = best;
  summary["exit_code"] = report.exit_code;
  write_text_file(rep / "run_report.json", summary.dump(2));
}

}  // namespace

RunReport run_pipeline(const RunConfig& cfg) {
  if (cfg.out_dir.empty())
    throw std::invalid_argument("run_pipeline: out_dir not set");
  fs::create_directories(fs::path(cfg.out_dir));
  write_text_file(fs::path(cfg.out_dir) / "config_echo.json",
                  run_config_to_json(cfg));

  const int n_days = cfg.n_days();
  std::vector<DayResult> days(static_cast<size_t>(n_days));
  const int jobs = std::max(1, cfg.jobs);

  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int day = next.fetch_add(1);
      if (day >= n_days) return;
      DayResult& slot = days[static_cast<size_t>(day)];
      try {
        slot = process_day(cfg, day);
      } catch (const std::exception& ex) {
        slot.day = day;
        slot.ok = false;
        slot.error = ex.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunReport report;
  report.days_total = n_days;
  for (const auto& d : days) report.days_failed += d.ok ? 0 : 1;
  report.exit_code = report.days_failed > 0 ? 1 : 0;
  write_report_tables(cfg.out_dir, days, report);
  return report;
}

RunReport rebuild_report(const std::string& out_dir) {
  const fs::path root(out_dir);
  if (!fs::exists(root / "days"))
    throw std::runtime_error("rebuild_report: no days/ under " + out_dir);

  std::vector<DayResult> days;
  std::vector<fs::path> day_dirs;
  for (const auto& e : fs::directory_iterator(root / "days"))
    if (e.is_directory()) day_dirs.push_back(e.path());
  std::sort(day_dirs.begin(), day_dirs.end());

  for (const auto& dir : day_dirs) {
    DayResult d;
    d.day = static_cast<int>(days.size());
    d.ok = true;
    if (fs::exists(dir / "models")) {
      for (const auto& m : fs::directory_iterator(dir / "models")) {
        if (m.path().extension() != ".json") continue;
        const FittedModel model = model_from_json(read_text_file(m.path()));
        d.fits.emplace(model.family, model);
      }
    }
    if (!d.fits.empty()) d.best = designate_best(d.fits);
    if (fs::exists(dir / "selection.json")) {
      d.selection =
          selection_from_json(json::parse(read_text_file(dir / "selection.json")));
      d.has_selection = true;
    }
    days.push_back(std::move(d));
  }

  RunReport report;
  report.days_total = static_cast<int>(days.size());
  report.exit_code = 0;
  write_report_tables(root, days, report);
  return report;
}

}  // namespace lobres
