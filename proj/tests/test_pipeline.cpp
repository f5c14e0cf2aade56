#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lobres/pipeline.hpp"
#include "lobres/quantile_reg.hpp"

using namespace lobres;
namespace fs = std::filesystem;

namespace {

#ifndef LOBRES_CLI_PATH
#define LOBRES_CLI_PATH "lobres"
#endif

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(LOBRES_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

// Relative path -> content for every regular file under root.
std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.jobs = 2;
  cfg.out_dir = out.string();
  cfg.flow.days = 2;
  cfg.flow.seed = cfg.seed;
  cfg.flow.day_start_ms = 8 * 3600000;
  cfg.flow.day_end_ms = cfg.flow.day_start_ms + 2 * 3600000;  // short days
  cfg.flow.mean_gap_ms = 120;
  cfg.window = Window{cfg.flow.day_start_ms + 60000,
                      cfg.flow.day_end_ms - 60000};
  cfg.index_events_per_day = 500;
  cfg.families = {Family::lognormal, Family::gamma};
  cfg.covariate_set = CovariateSet::fixed_subset;
  cfg.subset_search = false;  // exercised separately; keep this test quick
  cfg.surface.grid = 6;
  cfg.surface.u_levels = {0.5, 0.9};
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("lobres_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run config json round trip and validation") {
  RunConfig cfg = small_config("/tmp/x");
  const std::string j = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json_text(j);
  CHECK(back.seed == cfg.seed);
  CHECK(back.flow.days == cfg.flow.days);
  CHECK(back.threshold_q == cfg.threshold_q);
  CHECK(back.window.start_ms == cfg.window.start_ms);
  CHECK(back.families == cfg.families);
  CHECK(back.covariate_set == cfg.covariate_set);

  CHECK_THROWS(run_config_from_json_text("{\"threshold_q\": 1.5}"));
  CHECK_THROWS(run_config_from_json_text(
      "{\"window\": {\"start_ms\": 100, \"end_ms\": 50}}"));
  CHECK_THROWS(run_config_from_json_text("{\"measure\": \"depth\"}"));
}

TEST_CASE("process_day writes the full artifact set") {
  TempDir tmp("day");
  RunConfig cfg = small_config(tmp.path);
  const DayResult res = process_day(cfg, 0);
  REQUIRE(res.ok);
  CHECK(res.n_records > 50);
  CHECK(res.fits.size() == 2);
  CHECK(res.best.has_value());
  const fs::path day = tmp.path / "days" / "day000";
  for (const char* f : {"events.csv", "index.csv", "liquidity.csv",
                        "occupancy.csv", "ted.csv"})
    CHECK(fs::exists(day / f));
  CHECK(fs::exists(day / "models" / "lognormal_single.json"));
  CHECK(fs::exists(day / "models" / "gamma_single.json"));
  const FittedModel m = model_from_json(
      slurp(day / "models" / "lognormal_single.json"));
  CHECK(m.converged);
  CHECK(m.n == res.n_records - res.n_censored);
  // Surfaces for converged fits with both surface covariates in the set.
  CHECK(fs::exists(day / "lognormal_surface.csv"));
}

TEST_CASE("pipeline determinism: identical trees across runs and job counts") {
  TempDir t1("run1"), t2("run2");
  RunConfig c1 = small_config(t1.path);
  RunConfig c2 = small_config(t2.path);
  c2.jobs = 1;  // parallelism must not change any byte
  const RunReport r1 = run_pipeline(c1);
  const RunReport r2 = run_pipeline(c2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  auto a = tree_contents(t1.path);
  auto b = tree_contents(t2.path);
  REQUIRE(a.size() == b.size());
  for (const auto& [rel, content] : a) {
    INFO(rel);
    CHECK(content == b.at(rel));
  }
  CHECK(fs::exists(t1.path / "report" / "deviance_table.csv"));
  CHECK(fs::exists(t1.path / "report" / "r2_summary.csv"));
  CHECK(fs::exists(t1.path / "report" / "run_report.json"));
}

TEST_CASE("rebuild_report reproduces the aggregate tables") {
  TempDir tmp("rebuild");
  RunConfig cfg = small_config(tmp.path);
  cfg.subset_search = true;  // also exercises selection.json persistence
  run_pipeline(cfg);
  CHECK(fs::exists(tmp.path / "days" / "day000" / "selection.json"));
  CHECK(fs::exists(tmp.path / "report" / "heatmap_inclusion.csv"));
  CHECK(fs::exists(tmp.path / "report" / "sign_table.csv"));
  const auto before = tree_contents(tmp.path / "report");
  const RunReport r = rebuild_report(tmp.path.string());
  CHECK(r.days_total == 2);
  const auto after = tree_contents(tmp.path / "report");
  for (const auto& [rel, content] : before) {
    INFO(rel);
    CHECK(content == after.at(rel));
  }
}

TEST_CASE("failed days land in the error manifest and exit code") {
  TempDir tmp("fail");
  RunConfig cfg = small_config(tmp.path);
  cfg.input_event_files = {"/nonexistent/events.csv"};
  const RunReport r = run_pipeline(cfg);
  CHECK(r.days_failed == 1);
  CHECK(r.exit_code == 1);
  CHECK(fs::exists(tmp.path / "report" / "error_manifest.json"));
}

TEST_CASE("cli: extract-ted on the documented step fixture") {
  TempDir tmp("cli_ext");
  {
    std::ofstream liq(tmp.path / "liq.csv");
    liq << "timestamp_ms,value\n0,3\n1000,6\n2000,6\n3000,3\n4000,7\n5000,3\n";
  }
  const int rc = run_cli("extract-ted --liquidity " +
                         (tmp.path / "liq.csv").string() +
                         " --threshold-value 5 --window-start-ms 0 "
                         "--window-end-ms 6000 --out " +
                         (tmp.path / "ted.csv").string());
  REQUIRE(rc == 0);
  std::ifstream in(tmp.path / "ted.csv");
  const auto records = read_ted_csv(in);
  REQUIRE(records.size() == 2);
  CHECK(records[0].t_ms == 1000);
  CHECK(records[0].tau_ms == 2000);
  CHECK(records[1].t_ms == 4000);
  CHECK(records[1].tau_ms == 1000);
}

TEST_CASE("cli: fit on an exported TED CSV matches the library fit") {
  TempDir tmp("cli_fit");
  RunConfig cfg = small_config(tmp.path);
  REQUIRE(process_day(cfg, 0).ok);
  const fs::path ted = tmp.path / "days" / "day000" / "ted.csv";
  const fs::path model_json = tmp.path / "model.json";
  const int rc = run_cli("fit --ted " + ted.string() +
                         " --family gamma --link-mode single "
                         "--covariates fixed_subset --out " +
                         model_json.string());
  REQUIRE(rc == 0);
  const FittedModel via_cli = model_from_json(slurp(model_json));

  std::ifstream in(ted);
  const auto records = read_ted_csv(in);
  Eigen::VectorXd tau;
  const Eigen::MatrixXd X =
      design_from_records(records, fixed_subset(), false, &tau);
  const FittedModel direct =
      fit_ml(Family::gamma, LinkMode::single, X, tau,
             covariate_name_subset(fixed_subset()));
  CHECK(via_cli.log_lik == direct.log_lik);  // same code path, same bytes
  for (int j = 0; j < direct.beta.size(); ++j)
    CHECK(via_cli.beta[j] == direct.beta[j]);
}

TEST_CASE("cli: quantile-surface on a saved model matches in-process") {
  TempDir tmp("cli_qs");
  RunConfig cfg = small_config(tmp.path);
  REQUIRE(process_day(cfg, 0).ok);
  const fs::path ted = tmp.path / "days" / "day000" / "ted.csv";
  const fs::path model_json =
      tmp.path / "days" / "day000" / "models" / "lognormal_single.json";
  const fs::path out_csv = tmp.path / "surface.csv";
  const int rc = run_cli("quantile-surface --model " + model_json.string() +
                         " --ted " + ted.string() +
                         " --cov1 prevTEDavg --cov2 spreads --levels 0.5,0.9 "
                         "--grid 5 --out " +
                         out_csv.string());
  REQUIRE(rc == 0);

  const FittedModel model = model_from_json(slurp(model_json));
  std::ifstream in(ted);
  const auto records = read_ted_csv(in);
  std::vector<int> idx;
  for (const auto& n : model.covariate_names)
    idx.push_back(covariate_index(n));
  Eigen::VectorXd tau;
  const Eigen::MatrixXd X = design_from_records(records, idx, false, &tau);
  auto local = [&](const std::string& name) {
    for (size_t k = 0; k < model.covariate_names.size(); ++k)
      if (model.covariate_names[k] == name) return static_cast<int>(k);
    return -1;
  };
  const QuantileGrid g = quantile_surface(
      model, local("prevTEDavg"), local("spreads"),
      percentile_grid(X, local("prevTEDavg"), 5),
      percentile_grid(X, local("spreads"), 5), {0.5, 0.9},
      column_medians(X));
  std::ostringstream direct;
  write_quantile_csv(direct, g);
  CHECK(slurp(out_csv) == direct.str());  // byte-identical round trip
}

TEST_CASE("cli: unknown covariate names are rejected with nonzero exit") {
  TempDir tmp("cli_bad");
  std::ofstream(tmp.path / "t.csv") << "bogus\n";
  CHECK(run_cli("fit --ted " + (tmp.path / "t.csv").string() +
                " --family gamma --covariates nosuchthing --out /dev/null") !=
        0);
}
