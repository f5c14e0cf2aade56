#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lobres/fit.hpp"
#include "lobres/liquidity.hpp"
#include "lobres/select.hpp"
#include "lobres/synth.hpp"
#include "lobres/ted.hpp"

// Batch front-end: simulate -> replay -> extract -> fit -> select ->
// quantile surfaces, driven by a JSON config. All randomness flows from the
// single config seed through documented per-day derivations and no output
// contains wall-clock state, so a run is a pure function of (config,
// inputs).

namespace lobres {

enum class CovariateSet { full, fixed_subset, explicit_list };

struct SurfaceConfig {
  std::string cov1 = "prevTEDavg";
  std::string cov2 = "spreads";
  std::vector<double> u_levels = {0.1, 0.25, 0.5, 0.75, 0.9};
  int grid = 12;
};

struct RunConfig {
  uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;

  // Inputs: explicit event files (one per day), or the flow simulator.
  std::vector<std::string> input_event_files;
  std::vector<std::string> input_index_files;  // optional, aligned
  FlowConfig flow;
  int64_t index_events_per_day = 0;  // synthetic index stream intensity

  MeasureKind measure = MeasureKind::spread;
  double xlm_notional = 25000.0;
  double tick_size = 0.01;
  bool strict = false;

  double threshold_q = 0.5;
  Window window{(8 * 60 + 1) * 60000, (16 * 60 + 29) * 60000};  // 08:01-16:29

  std::vector<Family> families = {Family::lognormal, Family::gamma,
                                  Family::weibull, Family::gengamma};
  LinkMode link_mode = LinkMode::single;
  CovariateSet covariate_set = CovariateSet::fixed_subset;
  std::vector<std::string> explicit_covariates;
  bool include_censored = false;

  bool subset_search = true;
  SurfaceConfig surface;

  CovariateSpec covariates;

  int n_days() const {
    return input_event_files.empty() ? flow.days
                                     : static_cast<int>(input_event_files.size());
  }
  std::vector<int> fit_covariate_indices() const;
};

// Parses the config JSON (schema_version 1) and applies LOBRES_SEED,
// LOBRES_JOBS, LOBRES_OUT and LOBRES_THRESHOLD_Q environment overrides.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

struct DayResult {
  int day = 0;
  bool ok = false;
  std::string error;
  int n_records = 0;
  int n_censored = 0;
  std::map<Family, FittedModel> fits;
  std::optional<Family> best;
  bool has_selection = false;
  DailySelection selection;
};

// Runs one day end to end, writing artifacts under <out>/days/dayNNN/.
DayResult process_day(const RunConfig& cfg, int day_index);

struct RunReport {
  int days_total = 0;
  int days_failed = 0;
  std::map<Family, int> lowest_deviance_count;
  std::map<Family, int> converged_count;
  int exit_code = 0;
};

// Full batch: day-level parallelism with a bounded worker pool, then the
// sequential aggregation that writes the report tables.
RunReport run_pipeline(const RunConfig& cfg);

// Rebuilds the report tables from persisted day artifacts (models/*.json
// and selection.json under <runs>/days/dayNNN/).
RunReport rebuild_report(const std::string& out_dir);

// Helpers shared with the CLI.
Eigen::MatrixXd design_from_records(const std::vector<TedRecord>& records,
                                    const std::vector<int>& cov_indices,
                                    bool include_censored,
                                    Eigen::VectorXd* tau_out);
std::vector<std::string> covariate_name_subset(
    const std::vector<int>& indices);

}  // namespace lobres
