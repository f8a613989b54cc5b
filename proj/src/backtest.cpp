#include "kernelcast/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "kernelcast/conformal.hpp"
#include "kernelcast/errors.hpp"
#include "kernelcast/gpr.hpp"
#include "kernelcast/hybrid.hpp"
#include "kernelcast/lear.hpp"
#include "kernelcast/rng.hpp"
#include "kernelcast/svr.hpp"

namespace kcast {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  raise(Err::ConfigError, "expected a boolean, got '" + v + "'");
}

int parse_int_cfg(const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    raise(Err::ConfigError, "expected an integer, got '" + v + "'");
  return out;
}

double parse_double_cfg(const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    raise(Err::ConfigError, "expected a number, got '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::IoError, "cannot open config '" + path + "'");
  Config cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      raise(Err::ConfigError, path + ":" + std::to_string(line_no) + ": expected key=value");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  if (key == "data.path") data_path = value;
  else if (key == "data.impute_max_run") impute_max_run = parse_int_cfg(value);
  else if (key == "data.col.timestamp") schema.timestamp = value;
  else if (key == "data.col.price") schema.price = value;
  else if (key == "data.col.residual_load") schema.residual_load = value;
  else if (key == "data.col.renewables") schema.renewables = value;
  else if (key == "transform.signed_log") signed_log_enabled = parse_bool(value);
  else if (key == "transform.standardize") standardize = parse_bool(value);
  else if (key == "backtest.start") start_date = value;
  else if (key == "backtest.end") end_date = value;
  else if (key == "backtest.window_days") window_days = parse_int_cfg(value);
  else if (key == "backtest.horizon_hours") horizon_hours = parse_int_cfg(value);
  else if (key == "backtest.models") models = split_list(value);
  else if (key == "backtest.refit_cadence_days") refit_cadence_days = parse_int_cfg(value);
  else if (key == "backtest.seed") seed = static_cast<std::uint64_t>(parse_int_cfg(value));
  else if (key == "backtest.threads") threads = parse_int_cfg(value);
  else if (key == "backtest.output_dir") output_dir = value;
  else if (key == "hybrid.lambda1") lambda1 = parse_double_cfg(value);
  else if (key == "hybrid.lambda2") lambda2 = parse_double_cfg(value);
  else if (key == "gpr.restarts") gpr_restarts = parse_int_cfg(value);
  else if (key == "gpr.alpha") gpr_alpha = parse_double_cfg(value);
  else if (key == "gpr.kernel") gpr_kernel = value;
  else if (key == "svr.holdout_days") svr_holdout_days = parse_int_cfg(value);
  else if (key == "svr.tol") svr_tol = parse_double_cfg(value);
  else if (key == "svr.max_passes") svr_max_passes = parse_int_cfg(value);
  else if (key == "svr.degree") svr_degree = parse_int_cfg(value);
  else if (key == "conformal.nu") conformal_nu = parse_double_cfg(value);
  else if (key == "conformal.candidates") conformal_candidates = parse_int_cfg(value);
  else if (key == "conformal.bootstrap_reps") conformal_bootstrap_reps = parse_int_cfg(value);
  else if (key == "conformal.split") conformal_split = parse_bool(value);
  else if (key == "lear.holdout_days") lear_holdout_days = parse_int_cfg(value);
  else if (key == "diagnose.hour") diagnose_hour = parse_int_cfg(value);
  else if (key.rfind("external.", 0) == 0) {
    const std::string tag = key.substr(9);
    if (tag.empty()) raise(Err::ConfigError, "external.<tag> needs a tag");
    external_forecasts[tag] = value;
  } else {
    raise(Err::ConfigError, "unknown config key '" + key + "'");
  }
}

void Config::validate() const {
  if (data_path.empty()) raise(Err::ConfigError, "data.path is required");
  if (window_days < 8) raise(Err::ConfigError, "backtest.window_days must be >= 8");
  if (horizon_hours != 24 && horizon_hours != 48)
    raise(Err::ConfigError, "backtest.horizon_hours must be 24 or 48");
  if (refit_cadence_days < 1) raise(Err::ConfigError, "refit cadence must be >= 1");
  if (threads < 1) raise(Err::ConfigError, "backtest.threads must be >= 1");
  bool has_gpr = false, has_svr = false, has_hybrid = false;
  for (const auto& m : models) {
    if (m == "gpr") has_gpr = true;
    else if (m == "svr") has_svr = true;
    else if (m == "hybrid") has_hybrid = true;
    else if (m != "lear")
      raise(Err::ConfigError, "unknown model '" + m + "'");
  }
  if (has_hybrid && (!has_gpr || !has_svr))
    raise(Err::ConfigError, "hybrid requires both gpr and svr to be enabled");
  HybridWeights{lambda1, lambda2}.validate();
  KernelSelector::parse(gpr_kernel);
  if (diagnose_hour < 0 || diagnose_hour > 23)
    raise(Err::ConfigError, "diagnose.hour must be in [0, 23]");
}

int effective_threads(int requested) {
  int cap = requested;
  if (const char* env = std::getenv("KERNELCAST_THREADS")) {
    try {
      cap = std::min(cap, std::max(1, std::stoi(env)));
    } catch (...) {
      raise(Err::ConfigError, "KERNELCAST_THREADS is not an integer");
    }
  }
  return std::max(1, cap);
}

namespace {

struct Panels {
  DayMatrixSet raw;
};

Panels load_panels(const Config& cfg) {
  HourlyPanel panel = load_csv(cfg.data_path, cfg.schema);
  panel = impute_gaps(panel, cfg.impute_max_run, GapPolicy::MaskDays);
  Panels p;
  p.raw = build_day_matrices(panel);
  return p;
}

struct DayWindow {
  int win_begin = 0;
  int win_end = 0;
  TransformSpec spec;
  DayMatrixSet transformed;  // rows outside [win_begin, target] are untouched
};

DayWindow make_window(const DayMatrixSet& raw, const Config& cfg, int target_day) {
  DayWindow w;
  w.win_end = target_day - 1;
  w.win_begin = target_day - cfg.window_days - 7;
  if (w.win_begin < 0)
    raise(Err::InsufficientHistory,
          "target " + format_date(raw.date_of(target_day)) + " needs " +
              std::to_string(cfg.window_days + 7) + " days of history");
  w.spec = TransformSpec::fit(raw, w.win_begin, w.win_end, cfg.signed_log_enabled,
                              cfg.standardize);
  w.transformed = forward_transform(raw, w.spec);
  return w;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct TaskOutput {
  std::vector<ForecastRecord> records;
  std::vector<FailureNote> failures;
  std::vector<TimingRow> timings;
};

struct ModelDayOutput {
  // transformed-scale point per hour, raw-scale record fields
  double point_t = 0;
  double point_raw = 0;
  std::optional<double> lb, ub;
  bool ok = false;
};

// One (hour-block) unit of GPR work: hyperparameters fitted once at the
// block head, the posterior rebuilt on every day's window.
class GprRunner {
 public:
  GprRunner(const Config& cfg, int hour) : cfg_(cfg), hour_(hour) {
    opts_.kernel = KernelSelector::parse(cfg.gpr_kernel);
    opts_.restarts = cfg.gpr_restarts;
  }

  void calibrate(const DayWindow& w, int block_day, TaskOutput& out) {
    const auto t0 = Clock::now();
    HourDataset ds = build_hour_dataset(w.transformed, hour_, w.win_begin, w.win_end);
    opts_.seed = mix_seed(cfg_.seed, mix_seed(0x677072ULL, mix_seed(
        static_cast<std::uint64_t>(hour_), static_cast<std::uint64_t>(block_day))));
    hyper_ = fit(ds.inputs, ds.targets, opts_);
    out.timings.push_back(TimingRow{w.transformed.date_of(block_day), hour_, "gpr", "fit",
                                    ms_since(t0)});
  }

  ModelDayOutput predict_day(const DayWindow& w, int target_day,
                             const std::optional<std::pair<int, Eigen::RowVectorXd>>& po) {
    HourDataset ds = build_hour_dataset(w.transformed, hour_, w.win_begin, w.win_end);
    GprModel daily = refit(*hyper_, ds.inputs, ds.targets);
    Eigen::MatrixXd q(1, kFeatureDim);
    q.row(0) = build_prediction_vector(w.transformed, hour_, w.win_begin, w.win_end,
                                       target_day, po)
                   .transpose();
    GprPrediction pr = predict(daily, q, cfg_.gpr_alpha)[0];
    ModelDayOutput o;
    o.point_t = pr.mean;
    o.point_raw = inverse_value(pr.mean, w.spec.price);
    o.lb = inverse_value(pr.lower, w.spec.price);
    o.ub = inverse_value(pr.upper, w.spec.price);
    o.ok = true;
    return o;
  }

 private:
  const Config& cfg_;
  int hour_;
  GprOptions opts_;
  std::optional<GprModel> hyper_;
};

class SvrRunner {
 public:
  SvrRunner(const Config& cfg, int hour) : cfg_(cfg), hour_(hour) {}

  void calibrate(const DayWindow& w, int block_day, TaskOutput& out) {
    const auto t0 = Clock::now();
    HourDataset ds = build_hour_dataset(w.transformed, hour_, w.win_begin, w.win_end);
    GridSearchResult gs =
        grid_search(ds.inputs, ds.targets, cfg_.svr_holdout_days, cfg_.svr_tol,
                    cfg_.svr_max_passes);
    chosen_ = gs.config;
    chosen_.degree = cfg_.svr_degree;
    out.timings.push_back(TimingRow{w.transformed.date_of(block_day), hour_, "svr",
                                    "search", ms_since(t0)});
  }

  ModelDayOutput predict_day(const DayWindow& w, int target_day,
                             const std::optional<std::pair<int, Eigen::RowVectorXd>>& po) {
    HourDataset ds = build_hour_dataset(w.transformed, hour_, w.win_begin, w.win_end);
    const int n = static_cast<int>(ds.inputs.rows());

    Eigen::MatrixXd fit_X = ds.inputs;
    Eigen::VectorXd fit_y = ds.targets;
    int calib_from = n;  // in-sample scores by default
    if (cfg_.conformal_split) {
      const int calib = std::max(1, n / 4);
      if (n - calib >= 2) {
        calib_from = n - calib;
        fit_X = ds.inputs.topRows(calib_from);
        fit_y = ds.targets.head(calib_from);
      }
    }
    SvrModel m = solve_dual(fit_X, fit_y, chosen_, cfg_.svr_tol, cfg_.svr_max_passes);

    Eigen::VectorXd sc;
    if (calib_from < n) {
      const Eigen::VectorXd calib_pred = predict(m, ds.inputs.bottomRows(n - calib_from));
      sc = scores(ds.targets.tail(n - calib_from), calib_pred);
    } else {
      sc = scores(ds.targets, predict(m, ds.inputs));
    }

    Eigen::MatrixXd q(1, kFeatureDim);
    q.row(0) = build_prediction_vector(w.transformed, hour_, w.win_begin, w.win_end,
                                       target_day, po)
                   .transpose();
    const double point_t = predict(m, q)(0);

    const double mu = ds.targets.mean();
    const double sd = std::sqrt(
        (ds.targets.array() - mu).square().sum() / std::max(1, n - 1));
    ConformalConfig cc;
    cc.nu = cfg_.conformal_nu;
    cc.num_candidates = cfg_.conformal_candidates;
    cc.bootstrap_reps = cfg_.conformal_bootstrap_reps;
    cc.rng_seed = cfg_.seed;
    RngStream stream = make_stream(cfg_.seed, 0x636f6e66ULL,
                                   static_cast<std::uint64_t>(target_day),
                                   static_cast<std::uint64_t>(hour_));
    BootstrapInterval bi =
        interval_bootstrap(point_t, sc, mu, sd > 0 ? sd : 1.0, cc, stream);

    ModelDayOutput o;
    o.point_t = point_t;
    o.point_raw = inverse_value(point_t, w.spec.price);
    o.lb = inverse_value(bi.interval.lb, w.spec.price);
    o.ub = inverse_value(bi.interval.ub, w.spec.price);
    o.ok = true;
    return o;
  }

 private:
  const Config& cfg_;
  int hour_;
  SvrConfig chosen_;
};

class LearRunner {
 public:
  LearRunner(const Config& cfg, int hour) : cfg_(cfg), hour_(hour) {}

  void calibrate(const DayWindow& w, int block_day, TaskOutput& out) {
    const auto t0 = Clock::now();
    LearDesign d = build_design(w.transformed, hour_, w.win_begin, w.win_end);
    lambda_ = select_lambda(d, lambda_grid(lambda_max(d.X, d.y)), cfg_.lear_holdout_days);
    out.timings.push_back(TimingRow{w.transformed.date_of(block_day), hour_, "lear",
                                    "search", ms_since(t0)});
  }

  ModelDayOutput predict_day(const DayWindow& w, int target_day,
                             const std::optional<std::pair<int, Eigen::RowVectorXd>>& po) {
    LearDesign d = build_design(w.transformed, hour_, w.win_begin, w.win_end);
    LearModel m = fit_lear(d, lambda_, hour_);
    const Eigen::VectorXd row = build_lear_row(w.transformed, target_day, po);
    ModelDayOutput o;
    o.point_t = predict(m, row);
    o.point_raw = inverse_value(o.point_t, w.spec.price);
    o.ok = true;
    return o;
  }

 private:
  const Config& cfg_;
  int hour_;
  double lambda_ = 0;
};

struct BlockTask {
  int block_index = 0;
  std::vector<int> calib_days;  // calibration day per stride step
  int hour = -1;                // -1 = all hours (two-day horizon)
};

}  // namespace

BacktestResult run_backtest(const Config& cfg) {
  cfg.validate();
  if (cfg.start_date.empty() || cfg.end_date.empty())
    raise(Err::ConfigError, "backtest.start and backtest.end are required");

  Panels panels = load_panels(cfg);
  const DayMatrixSet& raw = panels.raw;

  const int first_target = raw.day_index_of(parse_date(cfg.start_date));
  const int last_target = raw.day_index_of(parse_date(cfg.end_date));
  if (first_target < 0 || last_target >= raw.days() || first_target > last_target)
    raise(Err::InsufficientHistory, "target range not covered by the data");
  if (first_target - cfg.window_days - 7 < 0)
    raise(Err::InsufficientHistory,
          "need " + std::to_string(cfg.window_days + 7) + " days before " + cfg.start_date);

  const bool two_day = cfg.horizon_hours == 48;
  const int stride = two_day ? 2 : 1;
  std::vector<int> calib_days;
  for (int d = first_target; d <= last_target; d += stride) calib_days.push_back(d);

  // Blocks of `refit_cadence_days` target days share one calibration.
  std::vector<BlockTask> tasks;
  {
    std::vector<std::vector<int>> blocks;
    std::vector<int> cur;
    int covered = 0;
    for (int d : calib_days) {
      cur.push_back(d);
      covered += stride;
      if (covered >= cfg.refit_cadence_days) {
        blocks.push_back(cur);
        cur.clear();
        covered = 0;
      }
    }
    if (!cur.empty()) blocks.push_back(cur);
    int bi = 0;
    for (auto& b : blocks) {
      if (two_day) {
        tasks.push_back(BlockTask{bi++, b, -1});
      } else {
        for (int h = 0; h < 24; ++h) tasks.push_back(BlockTask{bi, b, h});
        ++bi;
      }
    }
  }

  const bool want_gpr = std::count(cfg.models.begin(), cfg.models.end(), "gpr") > 0;
  const bool want_svr = std::count(cfg.models.begin(), cfg.models.end(), "svr") > 0;
  const bool want_hybrid = std::count(cfg.models.begin(), cfg.models.end(), "hybrid") > 0;
  const bool want_lear = std::count(cfg.models.begin(), cfg.models.end(), "lear") > 0;
  const HybridWeights weights{cfg.lambda1, cfg.lambda2};

  std::vector<TaskOutput> outputs(tasks.size());

  auto run_hour_block = [&](const BlockTask& task, int hour, TaskOutput& out) {
    GprRunner gpr_runner(cfg, hour);
    SvrRunner svr_runner(cfg, hour);
    LearRunner lear_runner(cfg, hour);
    bool calibrated = false;

    for (int ci = 0; ci < static_cast<int>(task.calib_days.size()); ++ci) {
      const int calib_day = task.calib_days[static_cast<size_t>(ci)];
      DayWindow w;
      try {
        w = make_window(raw, cfg, calib_day);
      } catch (const Error& e) {
        out.failures.push_back(FailureNote{raw.date_of(calib_day), hour, "all", e.what()});
        continue;
      }
      if (!calibrated) {
        try {
          if (want_gpr || want_hybrid) gpr_runner.calibrate(w, calib_day, out);
          if (want_svr || want_hybrid) svr_runner.calibrate(w, calib_day, out);
          if (want_lear) lear_runner.calibrate(w, calib_day, out);
          calibrated = true;
        } catch (const Error& e) {
          out.failures.push_back(
              FailureNote{raw.date_of(calib_day), hour, "all", e.what()});
          continue;
        }
      }

      const int horizon_days = two_day ? 2 : 1;
      // transformed day-one price predictions, for the two-day lag substitution
      std::map<std::string, Eigen::RowVectorXd> day_one_t;

      for (int step = 0; step < horizon_days; ++step) {
        const int target_day = calib_day + step;
        if (target_day > last_target || target_day >= raw.days()) break;
        const CivilDate date = raw.date_of(target_day);

        auto predict_model = [&](const std::string& tag, auto& runner) -> ModelDayOutput {
          std::optional<std::pair<int, Eigen::RowVectorXd>> po;
          if (step == 1) {
            auto it = day_one_t.find(tag);
            if (it == day_one_t.end()) return ModelDayOutput{};
            po = std::make_pair(calib_day, it->second);
          }
          const auto t0 = Clock::now();
          ModelDayOutput o = runner.predict_day(w, target_day, po);
          out.timings.push_back(TimingRow{date, hour, tag, "predict_day", ms_since(t0)});
          return o;
        };

        ModelDayOutput g, s, l;
        if (want_gpr || want_hybrid) {
          try {
            g = predict_model("gpr", gpr_runner);
          } catch (const Error& e) {
            out.failures.push_back(FailureNote{date, hour, "gpr", e.what()});
          }
        }
        if (want_svr || want_hybrid) {
          try {
            s = predict_model("svr", svr_runner);
          } catch (const Error& e) {
            out.failures.push_back(FailureNote{date, hour, "svr", e.what()});
          }
        }
        if (want_lear) {
          try {
            l = predict_model("lear", lear_runner);
          } catch (const Error& e) {
            out.failures.push_back(FailureNote{date, hour, "lear", e.what()});
          }
        }

        if (want_gpr && g.ok)
          out.records.push_back(ForecastRecord{date, hour, "gpr", g.point_raw, g.lb, g.ub});
        if (want_svr && s.ok)
          out.records.push_back(ForecastRecord{date, hour, "svr", s.point_raw, s.lb, s.ub});
        if (want_lear && l.ok)
          out.records.push_back(ForecastRecord{date, hour, "lear", l.point_raw, {}, {}});
        if (want_hybrid) {
          if (g.ok && s.ok) {
            const double pt = combine_point({g.point_raw, Scale::Raw},
                                            {s.point_raw, Scale::Raw}, weights);
            const Interval iv =
                combine_interval(Interval{*g.lb, *g.ub}, Interval{*s.lb, *s.ub}, weights);
            out.records.push_back(ForecastRecord{date, hour, "hybrid", pt, iv.lb, iv.ub});
          } else {
            out.failures.push_back(
                FailureNote{date, hour, "hybrid", "component forecast missing"});
          }
        }

        if (two_day && step == 0) {
          // collect this hour's transformed predictions into per-model day rows
          if (g.ok) day_one_row(day_one_t, "gpr", hour, g.point_t);
          if (s.ok) day_one_row(day_one_t, "svr", hour, s.point_t);
          if (l.ok) day_one_row(day_one_t, "lear", hour, l.point_t);
        }
      }
    }
  };

  // The two-day horizon needs all 24 hour predictions of day one before day
  // two, so its task granularity is the whole block.
  auto run_task = [&](size_t ti) {
    const BlockTask& task = tasks[ti];
    TaskOutput& out = outputs[ti];
    try {
      if (task.hour >= 0) {
        run_hour_block(task, task.hour, out);
      } else {
        run_two_day_block(task, out);
      }
    } catch (const std::exception& e) {
      out.failures.push_back(FailureNote{CivilDate{}, -1, "all",
                                         std::string("task failed: ") + e.what()});
    }
  };

  const int nthreads = effective_threads(cfg.threads);
  if (nthreads <= 1 || tasks.size() <= 1) {
    for (size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&] {
        for (size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1))
          run_task(t);
      });
    for (auto& th : pool) th.join();
  }

  BacktestResult result;
  for (auto& out : outputs) {
    result.records.insert(result.records.end(), out.records.begin(), out.records.end());
    result.failures.insert(result.failures.end(), out.failures.begin(), out.failures.end());
    result.timings.insert(result.timings.end(), out.timings.begin(), out.timings.end());
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ForecastRecord& a, const ForecastRecord& b) {
              if (a.date != b.date) return a.date < b.date;
              if (a.hour != b.hour) return a.hour < b.hour;
              return a.model < b.model;
            });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const FailureNote& a, const FailureNote& b) {
              if (a.date != b.date) return a.date < b.date;
              if (a.hour != b.hour) return a.hour < b.hour;
              return a.model < b.model;
            });
  std::sort(result.timings.begin(), result.timings.end(),
            [](const TimingRow& a, const TimingRow& b) {
              if (a.date != b.date) return a.date < b.date;
              if (a.hour != b.hour) return a.hour < b.hour;
              if (a.model != b.model) return a.model < b.model;
              return a.phase < b.phase;
            });

  for (int d = first_target; d <= last_target; ++d)
    if (raw.valid[static_cast<size_t>(d)])
      result.actuals.emplace_back(raw.date_of(d), raw.price.row(d).transpose());

  for (const auto& m : cfg.models) result.model_tags.push_back(m);
  for (const auto& [tag, path] : cfg.external_forecasts) result.model_tags.push_back(tag);
  std::sort(result.model_tags.begin(), result.model_tags.end());
  return result;
}

void diagnose_kernels(const Config& cfg, const std::string& outdir) {
  (void)cfg;
  (void)outdir;
}

}  // namespace kcast
