#include "kernelcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kernelcast/errors.hpp"

namespace kcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, int line_no) {
  const std::string t = trim(s);
  double v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    raise(Err::MalformedRow, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

std::int64_t slot_key(const CivilDate& d, int hour) {
  return days_from_civil(d) * 24 + hour;
}

}  // namespace

HourlyPanel load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) raise(Err::IoError, "cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) raise(Err::EmptyFile, path);
  auto cols = split_csv_line(header);
  int c_ts = -1, c_p = -1, c_l = -1, c_r = -1;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    const std::string name = trim(cols[i]);
    if (name == schema.timestamp) c_ts = i;
    else if (name == schema.price) c_p = i;
    else if (name == schema.residual_load) c_l = i;
    else if (name == schema.renewables) c_r = i;
  }
  if (c_ts < 0 || c_p < 0 || c_l < 0 || c_r < 0)
    raise(Err::MalformedRow,
          "header '" + header + "' does not contain the configured columns");

  HourlyPanel panel;
  std::string line;
  int line_no = 1;
  std::int64_t last_utc = std::numeric_limits<std::int64_t>::min();
  std::int64_t last_slot = std::numeric_limits<std::int64_t>::min();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= std::max({c_ts, c_p, c_l, c_r}))
      raise(Err::MalformedRow, "line " + std::to_string(line_no) + ": too few fields");

    LocalHour lh;
    try {
      lh = parse_timestamp(trim(fields[c_ts]));
    } catch (const Error& e) {
      raise(Err::MalformedRow, "line " + std::to_string(line_no) + ": " + e.what());
    }

    const std::int64_t slot = slot_key(lh.date, lh.hour);
    if (lh.utc_epoch_minutes <= last_utc)
      raise(Err::DuplicateTimestamp,
            "line " + std::to_string(line_no) + ": instant '" + trim(fields[c_ts]) +
                "' does not advance");
    last_utc = lh.utc_epoch_minutes;

    if (slot == last_slot) {
      // DST fall-back: the same local hour appears twice with two offsets.
      // Keep the first occurrence.
      ++panel.dropped_dst_rows;
      continue;
    }
    if (slot < last_slot)
      raise(Err::MalformedRow,
            "line " + std::to_string(line_no) + ": local time moves backwards");
    last_slot = slot;

    HourlyRecord rec;
    rec.date = lh.date;
    rec.hour = lh.hour;
    rec.price = parse_double(fields[c_p], line_no);
    rec.residual_load = parse_double(fields[c_l], line_no);
    rec.renewables = parse_double(fields[c_r], line_no);
    panel.records.push_back(rec);
  }
  if (panel.records.empty()) raise(Err::EmptyFile, path);

  // Record missing slots between the first and last observed hours.
  std::int64_t prev = slot_key(panel.records.front().date, panel.records.front().hour);
  for (size_t i = 1; i < panel.records.size(); ++i) {
    std::int64_t cur = slot_key(panel.records[i].date, panel.records[i].hour);
    for (std::int64_t s = prev + 1; s < cur; ++s)
      panel.gaps.push_back(GapInfo{civil_from_days(s / 24), static_cast<int>(s % 24)});
    prev = cur;
  }
  return panel;
}

HourlyPanel impute_gaps(const HourlyPanel& panel, int max_run, GapPolicy policy) {
  if (panel.gaps.empty()) return panel;

  HourlyPanel out;
  out.dropped_dst_rows = panel.dropped_dst_rows;
  const auto& recs = panel.records;
  out.records.reserve(recs.size() + panel.gaps.size());

  for (size_t i = 0; i < recs.size(); ++i) {
    out.records.push_back(recs[i]);
    if (i + 1 == recs.size()) break;
    const std::int64_t a = slot_key(recs[i].date, recs[i].hour);
    const std::int64_t b = slot_key(recs[i + 1].date, recs[i + 1].hour);
    const std::int64_t run = b - a - 1;
    if (run == 0) continue;
    if (run > max_run) {
      if (policy == GapPolicy::Strict)
        raise(Err::GapTooLong, "run of " + std::to_string(run) + " missing hours after " +
                                   format_date(recs[i].date) + " exceeds max_run " +
                                   std::to_string(max_run));
      for (std::int64_t s = a + 1; s < b; ++s)
        out.gaps.push_back(GapInfo{civil_from_days(s / 24), static_cast<int>(s % 24)});
      continue;
    }
    for (std::int64_t s = a + 1; s < b; ++s) {
      const double t = static_cast<double>(s - a) / static_cast<double>(b - a);
      HourlyRecord r;
      r.date = civil_from_days(s / 24);
      r.hour = static_cast<int>(s % 24);
      r.price = recs[i].price + t * (recs[i + 1].price - recs[i].price);
      r.residual_load =
          recs[i].residual_load + t * (recs[i + 1].residual_load - recs[i].residual_load);
      r.renewables = recs[i].renewables + t * (recs[i + 1].renewables - recs[i].renewables);
      out.records.push_back(r);
    }
  }
  return out;
}

DayMatrixSet build_day_matrices(const HourlyPanel& panel) {
  if (panel.records.empty()) raise(Err::EmptyFile, "panel has no records");
  DayMatrixSet set;
  set.start_date = panel.records.front().date;
  const std::int64_t d0 = days_from_civil(set.start_date);
  const std::int64_t d1 = days_from_civil(panel.records.back().date);
  const int n = static_cast<int>(d1 - d0 + 1);
  set.price = Eigen::MatrixXd::Constant(n, 24, kNaN);
  set.load = Eigen::MatrixXd::Constant(n, 24, kNaN);
  set.renewables = Eigen::MatrixXd::Constant(n, 24, kNaN);
  for (const auto& r : panel.records) {
    const int row = static_cast<int>(days_from_civil(r.date) - d0);
    set.price(row, r.hour) = r.price;
    set.load(row, r.hour) = r.residual_load;
    set.renewables(row, r.hour) = r.renewables;
  }
  set.valid.assign(n, true);
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < 24 && set.valid[i]; ++h)
      if (!std::isfinite(set.price(i, h)) || !std::isfinite(set.load(i, h)) ||
          !std::isfinite(set.renewables(i, h)))
        set.valid[i] = false;
  return set;
}

double signed_log(double x) { return x >= 0 ? std::log1p(x) : -std::log1p(-x); }

double signed_log_inv(double u) { return u >= 0 ? std::expm1(u) : -std::expm1(-u); }

double forward_value(double x, const VarTransform& vt) {
  double z = vt.use_signed_log ? signed_log(x) : x;
  if (vt.standardize) z = (z - vt.mean) / vt.std_dev;
  return z;
}

double inverse_value(double z, const VarTransform& vt) {
  double x = vt.standardize ? z * vt.std_dev + vt.mean : z;
  return vt.use_signed_log ? signed_log_inv(x) : x;
}

namespace {

VarTransform fit_var(const Eigen::MatrixXd& m, const std::vector<bool>& valid,
                     int win_begin, int win_end, bool use_signed_log, bool standardize) {
  VarTransform vt;
  vt.use_signed_log = use_signed_log;
  vt.standardize = standardize;
  if (!standardize) return vt;
  double sum = 0, sum2 = 0;
  long cnt = 0;
  for (int i = win_begin; i <= win_end; ++i) {
    if (!valid[i]) continue;
    for (int h = 0; h < 24; ++h) {
      double v = use_signed_log ? signed_log(m(i, h)) : m(i, h);
      sum += v;
      sum2 += v * v;
      ++cnt;
    }
  }
  if (cnt == 0) raise(Err::WindowTooShort, "no valid days in the transform window");
  vt.mean = sum / cnt;
  double var = sum2 / cnt - vt.mean * vt.mean;
  vt.std_dev = var > 0 ? std::sqrt(var) : 1.0;
  return vt;
}

void apply_var(Eigen::MatrixXd& m, const std::vector<bool>& valid, const VarTransform& vt) {
  for (int i = 0; i < m.rows(); ++i) {
    if (!valid[i]) continue;
    for (int h = 0; h < 24; ++h) m(i, h) = forward_value(m(i, h), vt);
  }
}

}  // namespace

TransformSpec TransformSpec::fit(const DayMatrixSet& set, int win_begin, int win_end,
                                 bool use_signed_log, bool standardize) {
  if (win_begin < 0 || win_end >= set.days() || win_begin > win_end)
    raise(Err::WindowTooShort, "transform window out of range");
  TransformSpec spec;
  spec.price = fit_var(set.price, set.valid, win_begin, win_end, use_signed_log, standardize);
  spec.load = fit_var(set.load, set.valid, win_begin, win_end, use_signed_log, standardize);
  spec.renewables =
      fit_var(set.renewables, set.valid, win_begin, win_end, use_signed_log, standardize);
  spec.fitted = true;
  return spec;
}

DayMatrixSet forward_transform(const DayMatrixSet& set, const TransformSpec& spec) {
  if (!spec.fitted && (spec.price.standardize || spec.load.standardize ||
                       spec.renewables.standardize))
    raise(Err::SpecNotFitted, "transform spec was never fitted");
  DayMatrixSet out = set;
  apply_var(out.price, out.valid, spec.price);
  apply_var(out.load, out.valid, spec.load);
  apply_var(out.renewables, out.valid, spec.renewables);
  return out;
}

HourlyPanel forward_transform(const HourlyPanel& panel, const TransformSpec& spec) {
  if (!spec.fitted && (spec.price.standardize || spec.load.standardize ||
                       spec.renewables.standardize))
    raise(Err::SpecNotFitted, "transform spec was never fitted");
  HourlyPanel out = panel;
  for (auto& r : out.records) {
    r.price = forward_value(r.price, spec.price);
    r.residual_load = forward_value(r.residual_load, spec.load);
    r.renewables = forward_value(r.renewables, spec.renewables);
  }
  return out;
}

HourlyPanel inverse_transform(const HourlyPanel& panel, const TransformSpec& spec) {
  HourlyPanel out = panel;
  for (auto& r : out.records) {
    r.price = inverse_value(r.price, spec.price);
    r.residual_load = inverse_value(r.residual_load, spec.load);
    r.renewables = inverse_value(r.renewables, spec.renewables);
  }
  return out;
}

namespace {

bool lags_valid(const DayMatrixSet& set, int day, bool include_own_price_day) {
  for (int lag : kPriceLags)
    if (!set.valid[day - lag]) return false;
  for (int lag : kExoLags)
    if (!set.valid[day - lag]) return false;
  return !include_own_price_day || set.valid[day];
}

void fill_feature_row(Eigen::Ref<Eigen::VectorXd> f, const DayMatrixSet& set, int day,
                      double scaled_index,
                      const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override) {
  f(0) = scaled_index;
  int k = 1;
  for (int lag : kPriceLags) {
    const int src = day - lag;
    if (price_override && price_override->first == src)
      f.segment(k, 24) = price_override->second.transpose();
    else
      f.segment(k, 24) = set.price.row(src).transpose();
    k += 24;
  }
  for (int lag : kExoLags) {
    f.segment(k, 24) = set.load.row(day - lag).transpose();
    k += 24;
  }
  for (int lag : kExoLags) {
    f.segment(k, 24) = set.renewables.row(day - lag).transpose();
    k += 24;
  }
  f.segment(kWeekdayOffset, 7).setZero();
  f(kWeekdayOffset + weekday_mon0(set.date_of(day))) = 1.0;
}

}  // namespace

HourDataset build_hour_dataset(const DayMatrixSet& transformed, int hour, int win_begin,
                               int win_end) {
  if (hour < 0 || hour > 23) raise(Err::ConfigError, "hour out of range");
  if (win_begin < 0 || win_end >= transformed.days())
    raise(Err::WindowTooShort, "window out of range");
  const int len = win_end - win_begin + 1;
  if (len < 8) raise(Err::WindowTooShort, "window of " + std::to_string(len) + " days, need >= 8");

  std::vector<int> rows;
  for (int i = win_begin + 7; i <= win_end; ++i)
    if (transformed.valid[i] && lags_valid(transformed, i, false)) rows.push_back(i);

  HourDataset ds;
  ds.inputs.resize(static_cast<int>(rows.size()), kFeatureDim);
  ds.targets.resize(static_cast<int>(rows.size()));
  ds.day_rows = rows;
  const double span = static_cast<double>(win_end - win_begin);
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const int i = rows[r];
    Eigen::VectorXd f(kFeatureDim);
    fill_feature_row(f, transformed, i, (i - win_begin) / span, {});
    ds.inputs.row(r) = f.transpose();
    ds.targets(r) = transformed.price(i, hour);
  }
  return ds;
}

Eigen::VectorXd build_prediction_vector(
    const DayMatrixSet& transformed, int hour, int win_begin, int win_end, int target_day,
    const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override) {
  (void)hour;
  if (target_day >= transformed.days() || target_day - 7 < 0)
    raise(Err::LagUnavailable, "target day out of range");
  for (int lag : kPriceLags) {
    const int src = target_day - lag;
    if (!(price_override && price_override->first == src) && !transformed.valid[src])
      raise(Err::LagUnavailable,
            "price lag day " + format_date(transformed.date_of(src)) + " is invalid");
  }
  for (int lag : kExoLags)
    if (!transformed.valid[target_day - lag])
      raise(Err::LagUnavailable,
            "exogenous day " + format_date(transformed.date_of(target_day - lag)) +
                " is invalid");
  Eigen::VectorXd f(kFeatureDim);
  const double span = static_cast<double>(win_end - win_begin);
  fill_feature_row(f, transformed, target_day, (target_day - win_begin) / span, price_override);
  return f;
}

}  // namespace kcast
