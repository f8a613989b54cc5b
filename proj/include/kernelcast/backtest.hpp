#ifndef KERNELCAST_BACKTEST_HPP
#define KERNELCAST_BACKTEST_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kernelcast/dataset.hpp"

namespace kcast {

// Parsed key=value configuration. Unknown keys are rejected so typos fail
// loudly; see the README for the full key list.
struct Config {
  // data.*
  std::string data_path;
  CsvSchema schema;
  int impute_max_run = 3;

  // transform.*
  bool signed_log_enabled = true;
  bool standardize = true;

  // backtest.*
  std::string start_date;  // first target day, YYYY-MM-DD
  std::string end_date;    // last target day, inclusive
  int window_days = 365;   // usable training pairs per window (plus 7 lead-in days)
  int horizon_hours = 24;  // 24 or 48
  std::vector<std::string> models{"gpr", "svr", "hybrid", "lear"};
  int refit_cadence_days = 7;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";

  // hybrid.*
  double lambda1 = 0.5;
  double lambda2 = 0.5;

  // gpr.*
  int gpr_restarts = 5;
  double gpr_alpha = 0.05;
  std::string gpr_kernel = "se+rq";

  // svr.*
  int svr_holdout_days = 28;
  double svr_tol = 1e-3;
  int svr_max_passes = 200;
  int svr_degree = 2;

  // conformal.*
  double conformal_nu = 3.0;
  int conformal_candidates = 500;
  int conformal_bootstrap_reps = 30;
  bool conformal_split = false;

  // lear.*
  int lear_holdout_days = 28;

  // diagnose.*
  int diagnose_hour = 12;

  // external.<tag> = csv path
  std::map<std::string, std::string> external_forecasts;

  static Config load(const std::string& path);
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

struct ForecastRecord {
  CivilDate date;
  int hour = 0;
  std::string model;
  double point = 0;                // EUR/MWh, raw scale
  std::optional<double> lb, ub;    // absent for models without intervals
};

struct FailureNote {
  CivilDate date;
  int hour = -1;  // -1 = whole day
  std::string model;
  std::string message;
};

struct TimingRow {
  CivilDate date;
  int hour = -1;
  std::string model;
  std::string phase;  // "search", "fit", "predict_day"
  double ms = 0;
};

struct BacktestResult {
  std::vector<ForecastRecord> records;   // (date, hour, model) order
  std::vector<std::pair<CivilDate, Eigen::VectorXd>> actuals;  // raw 24-hour price rows
  std::vector<FailureNote> failures;
  std::vector<TimingRow> timings;
  std::vector<std::string> model_tags;   // enabled + external, sorted
};

// Rolling day-ahead backtest over [start, end]: for each target day and each
// hour, models are trained on the trailing window and their back-transformed
// forecasts recorded. Fully deterministic for a fixed seed, independent of
// the thread count (KERNELCAST_THREADS caps config.threads).
BacktestResult run_backtest(const Config& cfg);

// Fits each kernel variant (SE, RQ, SE+RQ) by maximum likelihood on the
// window preceding the first target day and writes the Gram matrix CSVs plus
// the scaled below-threshold counts.
void diagnose_kernels(const Config& cfg, const std::string& outdir);

int effective_threads(int requested);

}  // namespace kcast

#endif
