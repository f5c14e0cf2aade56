// lobres — batch CLI over the liquidity-resilience library.
//
// Subcommands mirror the pipeline stages so every intermediate artifact can
// be produced and re-ingested standalone:
//   simulate, replay, extract-ted, fit, select, quantile-surface, report, run

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lobres/pipeline.hpp"
#include "lobres/quantile_reg.hpp"

namespace fs = std::filesystem;
using namespace lobres;

namespace {

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<int> covariates_from_flag(const std::string& flag) {
  if (flag == "full") {
    std::vector<int> all(kNumCovariates);
    for (int i = 0; i < kNumCovariates; ++i) all[static_cast<size_t>(i)] = i;
    return all;
  }
  if (flag == "fixed_subset") return fixed_subset();
  std::vector<int> idx;
  std::stringstream ss(flag);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int i = covariate_index(item);
    if (i < 0) throw CLI::ValidationError("unknown covariate: " + item);
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::vector<TedRecord> load_ted(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_ted_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold-exceedance-duration extraction and regression"};
  app.require_subcommand(1);

  // --- simulate -------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Generate synthetic event days");
  std::string sim_config, sim_out;
  sim->add_option("--config", sim_config, "Run config JSON")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->callback([&] {
    RunConfig cfg = load_run_config(sim_config);
    fs::create_directories(sim_out);
    for (int day = 0; day < cfg.flow.days; ++day) {
      cfg.flow.seed = cfg.seed;
      const auto events = gen_order_flow_day(cfg.flow, day);
      char name[32];
      std::snprintf(name, sizeof(name), "day%03d_events.csv", day);
      write_events_csv_file((fs::path(sim_out) / name).string(), events);
      std::cout << name << ": " << events.size() << " events\n";
    }
  });

  // --- sample-ted -------------------------------------------------------------
  auto* st = app.add_subcommand(
      "sample-ted", "Draw duration samples with known coefficients");
  std::string st_family = "gengamma", st_beta = "6.0,0.5,-0.3,0.4,-0.2",
              st_out;
  double st_lnsigma = std::log(0.8), st_nu = 1.3;
  int st_n = 1000, st_days = 1, st_gaussians = 2, st_dummies = 2;
  uint64_t st_seed = 1;
  st->add_option("--family", st_family)
      ->check(CLI::IsMember({"lognormal", "gamma", "weibull", "gengamma"}));
  st->add_option("--beta", st_beta, "Intercept-first comma list");
  st->add_option("--lnsigma", st_lnsigma);
  st->add_option("--nu", st_nu, "Gengamma shape");
  st->add_option("--n", st_n, "Records per day");
  st->add_option("--days", st_days);
  st->add_option("--gaussians", st_gaussians);
  st->add_option("--dummies", st_dummies, "0 or 2 (mobuy/mosell pair)");
  st->add_option("--seed", st_seed);
  st->add_option("--out", st_out, "Output directory")->required();
  st->callback([&] {
    TedGenConfig cfg;
    cfg.seed = st_seed;
    cfg.days = st_days;
    cfg.records_per_day = st_n;
    cfg.family = family_from_name(st_family);
    cfg.n_gaussian = st_gaussians;
    cfg.n_dummy = st_dummies;
    const auto b = parse_levels(st_beta);
    cfg.beta = Eigen::Map<const Eigen::VectorXd>(b.data(),
                                                 static_cast<long>(b.size()));
    if (cfg.beta.size() != st_gaussians + st_dummies + 1)
      throw CLI::ValidationError("--beta needs gaussians+dummies+1 entries");
    cfg.alpha = Eigen::VectorXd::Constant(1, st_lnsigma);
    if (cfg.family == Family::gengamma)
      cfg.nu_coef = Eigen::VectorXd::Constant(1, st_nu);
    fs::create_directories(st_out);
    for (int day = 0; day < cfg.days; ++day) {
      const TedSample sample = gen_ted_sample(cfg, day);
      const auto records = ted_sample_to_records(sample, cfg);
      char name[32];
      std::snprintf(name, sizeof(name), "day%03d_ted.csv", day);
      std::ofstream out(fs::path(st_out) / name);
      write_ted_csv(out, records);
    }
    std::ofstream truth(fs::path(st_out) / "truth.json");
    truth << ted_gen_truth_json(cfg) << "\n";
    std::cout << cfg.days << " day(s), " << st_n << " records each\n";
  });

  // --- replay ---------------------------------------------------------------
  auto* rep = app.add_subcommand("replay",
                                 "Replay events into a liquidity series");
  std::string rp_events, rp_measure = "spread", rp_out, rp_occ;
  double rp_notional = 25000.0, rp_tick = 0.01;
  bool rp_strict = false;
  rep->add_option("--events", rp_events)->required();
  rep->add_option("--measure", rp_measure)->check(CLI::IsMember({"spread", "xlm"}));
  rep->add_option("--notional", rp_notional);
  rep->add_option("--tick-size", rp_tick);
  rep->add_option("--out", rp_out, "Liquidity CSV")->required();
  rep->add_option("--occupancy", rp_occ, "Top-quintile occupancy CSV");
  rep->add_flag("--strict", rp_strict);
  rep->callback([&] {
    const auto events = parse_events_file(rp_events, rp_strict).events;
    if (events.empty()) throw std::runtime_error("no events");
    const Window span{events.front().timestamp_ms,
                      events.back().timestamp_ms + 1};
    EventSeries es;
    if (rp_measure == "spread") {
      const Replay replay = replay_events(events, 5, rp_strict);
      es = spread_event_series(replay, span);
    } else {
      es = xlm_event_series(events, rp_notional, rp_tick, span, rp_strict);
    }
    const LiquiditySeries series = to_series(es);
    std::ofstream out(rp_out);
    write_series_csv(out, series);
    if (!rp_occ.empty()) {
      std::ofstream occ(rp_occ);
      write_occupancy_csv(occ, quintile_occupancy(series));
    }
    std::cout << series.points.size() << " points";
    if (es.insufficient_depth_count > 0)
      std::cout << " (" << es.insufficient_depth_count
                << " skipped for depth)";
    std::cout << "\n";
  });

  // --- extract-ted ------------------------------------------------------------
  auto* ext = app.add_subcommand(
      "extract-ted", "Extract exceedance durations and covariates");
  std::string ex_liq, ex_events, ex_index, ex_out;
  double ex_q = 0.5, ex_fixed = 0.0;
  bool ex_have_fixed = false;
  int64_t ex_ws = (8 * 60 + 1) * 60000, ex_we = (16 * 60 + 29) * 60000;
  ext->add_option("--liquidity", ex_liq, "Series CSV")->required();
  ext->add_option("--events", ex_events,
                  "Event CSV (enables book covariates and triggers)");
  ext->add_option("--index", ex_index, "Index activity CSV");
  ext->add_option("--threshold-q", ex_q);
  ext->add_option("--threshold-value", ex_fixed)
      ->each([&](const std::string&) { ex_have_fixed = true; });
  ext->add_option("--window-start-ms", ex_ws);
  ext->add_option("--window-end-ms", ex_we);
  ext->add_option("--out", ex_out)->required();
  ext->callback([&] {
    const Window window{ex_ws, ex_we};
    std::ifstream in(ex_liq);
    if (!in) throw std::runtime_error("cannot open " + ex_liq);
    LiquiditySeries series = read_series_csv(in, window);
    if (series.points.empty()) throw std::runtime_error("empty series");
    series.trading_window = {series.points.front().t_ms,
                             std::max(series.points.back().t_ms + 1, ex_we)};
    const Threshold thr = ex_have_fixed ? fixed_threshold(ex_fixed)
                                        : daily_threshold(series, ex_q);

    std::vector<TedRecord> records;
    CovariateSpec spec;
    if (!ex_events.empty()) {
      const auto events = parse_events_file(ex_events).events;
      const Replay replay = replay_events(events, spec.n_levels);
      EventSeries es;
      es.trading_window = series.trading_window;
      for (const auto& p : series.points)
        es.entries.push_back({replay.frame_at(p.t_ms), p.t_ms, p.value});
      const auto obs = extract_teds_with_triggers(es, replay, thr, window);
      std::vector<int64_t> index_stream;
      if (!ex_index.empty()) {
        std::ifstream ix(ex_index);
        std::string line;
        std::getline(ix, line);
        while (std::getline(ix, line))
          if (!line.empty()) index_stream.push_back(std::stoll(line));
      }
      records = build_covariates(replay, obs, index_stream, spec, window);
    } else {
      // Liquidity series alone: exceedance history covariates only.
      const auto obs = extract_teds(series, thr, window);
      Replay empty_replay;
      records = build_covariates(empty_replay, obs, {}, spec, window);
    }
    std::ofstream out(ex_out);
    write_ted_csv(out, records);
    std::cout << records.size() << " records (threshold " << thr.c << ")\n";
  });

  // --- fit --------------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Fit one family on a TED CSV");
  std::string ft_ted, ft_family = "lognormal", ft_mode = "single",
              ft_cov = "fixed_subset", ft_out;
  bool ft_censored = false, ft_ols = false;
  fit_cmd->add_option("--ted", ft_ted)->required();
  fit_cmd->add_option("--family", ft_family)
      ->check(CLI::IsMember({"lognormal", "gamma", "weibull", "gengamma"}));
  fit_cmd->add_option("--link-mode", ft_mode)
      ->check(CLI::IsMember({"single", "two-link", "three-link"}));
  fit_cmd->add_option("--covariates", ft_cov,
                      "full | fixed_subset | comma list");
  fit_cmd->add_flag("--include-censored", ft_censored);
  fit_cmd->add_flag("--ols", ft_ols, "Log-linear OLS instead of ML");
  fit_cmd->add_option("--out", ft_out)->required();
  fit_cmd->callback([&] {
    const auto records = load_ted(ft_ted);
    const auto idx = covariates_from_flag(ft_cov);
    Eigen::VectorXd tau;
    const Eigen::MatrixXd X =
        design_from_records(records, idx, ft_censored, &tau);
    const auto names = covariate_name_subset(idx);
    const FittedModel model =
        ft_ols ? fit_loglinear(X, tau, names)
               : fit_ml(family_from_name(ft_family),
                        link_mode_from_name(ft_mode), X, tau, names);
    std::ofstream out(ft_out);
    out << model_to_json(model) << "\n";
    std::cout << family_name(model.family) << ": logL=" << model.log_lik
              << " deviance=" << model.deviance
              << " converged=" << (model.converged ? "yes" : "no") << "\n";
  });

  // --- select -------------------------------------------------------------
  auto* sel = app.add_subcommand("select",
                                 "Best-subset search over daily TED CSVs");
  std::vector<std::string> sl_teds;
  std::string sl_out;
  sel->add_option("--ted", sl_teds, "TED CSVs (one per day)")->required();
  sel->add_option("--out", sl_out, "Output directory")->required();
  sel->callback([&] {
    fs::create_directories(sl_out);
    std::vector<int> all(kNumCovariates);
    for (int i = 0; i < kNumCovariates; ++i) all[static_cast<size_t>(i)] = i;
    std::vector<DailySelection> days;
    for (const auto& path : sl_teds) {
      const auto records = load_ted(path);
      Eigen::VectorXd tau;
      const Eigen::MatrixXd X = design_from_records(records, all, false, &tau);
      DailySelection day;
      day.per_size = best_subsets(X, tau);
      day.full_model = fit_loglinear(X, tau, covariate_name_subset(all));
      days.push_back(std::move(day));
    }
    const auto tables = aggregate_daily(days);
    std::vector<std::string> names(covariate_names().begin(),
                                   covariate_names().end());
    {
      std::ofstream out(fs::path(sl_out) / "heatmap_inclusion.csv");
      write_heatmap_csv(out, tables.inclusion, names);
    }
    {
      std::ofstream out(fs::path(sl_out) / "heatmap_significance.csv");
      write_heatmap_csv(out, tables.significance, names);
    }
    {
      std::ofstream out(fs::path(sl_out) / "sign_table.csv");
      write_sign_table_csv(out, tables, names);
    }
    std::cout << days.size() << " day(s) aggregated\n";
  });

  // --- quantile-surface -----------------------------------------------------
  auto* qs = app.add_subcommand("quantile-surface",
                                "Conditional quantile surface from a model");
  std::string qs_model, qs_ted, qs_cov1 = "prevTEDavg", qs_cov2 = "spreads",
              qs_levels = "0.1,0.25,0.5,0.75,0.9", qs_out;
  int qs_grid = 12;
  qs->add_option("--model", qs_model, "Model JSON")->required();
  qs->add_option("--ted", qs_ted, "TED CSV for baselines/grids")->required();
  qs->add_option("--cov1", qs_cov1);
  qs->add_option("--cov2", qs_cov2);
  qs->add_option("--levels", qs_levels);
  qs->add_option("--grid", qs_grid);
  qs->add_option("--out", qs_out)->required();
  qs->callback([&] {
    std::ifstream in(qs_model);
    if (!in) throw std::runtime_error("cannot open " + qs_model);
    std::ostringstream oss;
    oss << in.rdbuf();
    const FittedModel model = model_from_json(oss.str());
    const auto records = load_ted(qs_ted);
    std::vector<int> idx;
    for (const auto& n : model.covariate_names) {
      const int gi = covariate_index(n);
      if (gi < 0) throw std::runtime_error("model covariate unknown: " + n);
      idx.push_back(gi);
    }
    Eigen::VectorXd tau;
    const Eigen::MatrixXd X = design_from_records(records, idx, false, &tau);
    auto local = [&](const std::string& name) {
      for (size_t k = 0; k < model.covariate_names.size(); ++k)
        if (model.covariate_names[k] == name) return static_cast<int>(k);
      throw std::runtime_error("covariate not in model: " + name);
    };
    const int l1 = local(qs_cov1), l2 = local(qs_cov2);
    const QuantileGrid g = quantile_surface(
        model, l1, l2, percentile_grid(X, l1, qs_grid),
        percentile_grid(X, l2, qs_grid), parse_levels(qs_levels),
        column_medians(X));
    std::ofstream out(qs_out);
    write_quantile_csv(out, g);
    std::cout << g.q.size() << " surface values\n";
  });

  // --- report -----------------------------------------------------------------
  auto* rpt = app.add_subcommand("report",
                                 "Rebuild aggregate tables from a run tree");
  std::string rpt_runs;
  rpt->add_option("--runs", rpt_runs, "Run output directory")->required();
  rpt->callback([&] {
    const RunReport r = rebuild_report(rpt_runs);
    std::cout << "report rebuilt over " << r.days_total << " day(s)\n";
  });

  // --- run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Full pipeline from a config");
  std::string rn_config, rn_out, rn_family, rn_mode, rn_cov;
  uint64_t rn_seed = 0;
  bool rn_have_seed = false;
  double rn_q = -1.0;
  int rn_jobs = 0;
  run->add_option("--config", rn_config)->required();
  run->add_option("--out", rn_out);
  run->add_option("--seed", rn_seed)->each([&](const std::string&) {
    rn_have_seed = true;
  });
  run->add_option("--threshold-q", rn_q);
  run->add_option("--jobs", rn_jobs);
  run->add_option("--family", rn_family, "Restrict to one family");
  run->add_option("--link-mode", rn_mode);
  run->add_option("--covariates", rn_cov, "full | fixed_subset | comma list");
  run->callback([&] {
    RunConfig cfg = load_run_config(rn_config);
    if (!rn_out.empty()) cfg.out_dir = rn_out;
    if (rn_have_seed) cfg.seed = rn_seed;
    if (rn_q > 0.0) cfg.threshold_q = rn_q;
    if (rn_jobs > 0) cfg.jobs = rn_jobs;
    if (!rn_family.empty()) cfg.families = {family_from_name(rn_family)};
    if (!rn_mode.empty()) cfg.link_mode = link_mode_from_name(rn_mode);
    if (!rn_cov.empty()) {
      if (rn_cov == "full") {
        cfg.covariate_set = CovariateSet::full;
      } else if (rn_cov == "fixed_subset") {
        cfg.covariate_set = CovariateSet::fixed_subset;
      } else {
        cfg.covariate_set = CovariateSet::explicit_list;
        cfg.explicit_covariates.clear();
        std::stringstream ss(rn_cov);
        std::string item;
        while (std::getline(ss, item, ','))
          cfg.explicit_covariates.push_back(item);
      }
    }
    cfg.flow.seed = cfg.seed;
    const RunReport r = run_pipeline(cfg);
    std::cout << "days=" << r.days_total << " failed=" << r.days_failed
              << "\n";
    if (r.exit_code != 0) throw CLI::RuntimeError(r.exit_code);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
