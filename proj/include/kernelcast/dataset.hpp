#ifndef KERNELCAST_DATASET_HPP
#define KERNELCAST_DATASET_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kernelcast/dates.hpp"

namespace kcast {

struct HourlyRecord {
  CivilDate date;
  int hour = 0;  // 0..23
  double price = 0;
  double residual_load = 0;
  double renewables = 0;
};

struct GapInfo {
  CivilDate date;
  int hour = 0;
};

// Hourly rows sorted by local (date, hour); gaps are the missing slots
// between the first and last record.
struct HourlyPanel {
  std::vector<HourlyRecord> records;
  std::vector<GapInfo> gaps;
  int dropped_dst_rows = 0;
};

struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string price = "price";
  std::string residual_load = "residual_load";
  std::string renewables = "renewables";
};

HourlyPanel load_csv(const std::string& path, const CsvSchema& schema = {});

enum class GapPolicy {
  Strict,    // any run longer than max_run (or at the panel boundary) throws
  MaskDays,  // long runs survive as gaps; the affected days are dropped later
};

// Fills gap runs of length <= max_run by linear interpolation between the
// neighboring hours, per variable.
HourlyPanel impute_gaps(const HourlyPanel& panel, int max_run,
                        GapPolicy policy = GapPolicy::Strict);

// n days x 24 hours matrices for price / residual load / renewables.
// `valid[i]` is false when day i still has missing hours after imputation.
struct DayMatrixSet {
  Eigen::MatrixXd price;
  Eigen::MatrixXd load;
  Eigen::MatrixXd renewables;
  CivilDate start_date;
  std::vector<bool> valid;

  int days() const { return static_cast<int>(price.rows()); }
  CivilDate date_of(int day) const { return advance(start_date, day); }
  int day_index_of(const CivilDate& d) const {
    return static_cast<int>(days_from_civil(d) - days_from_civil(start_date));
  }
};

DayMatrixSet build_day_matrices(const HourlyPanel& panel);

double signed_log(double x);
double signed_log_inv(double u);

struct VarTransform {
  bool use_signed_log = true;
  bool standardize = true;
  double mean = 0.0;
  double std_dev = 1.0;
};

struct TransformSpec {
  VarTransform price;
  VarTransform load;
  VarTransform renewables;
  bool fitted = false;

  // Statistics come from the window [win_begin, win_end] (day rows,
  // inclusive) only; prediction-time inputs reuse them unchanged.
  static TransformSpec fit(const DayMatrixSet& set, int win_begin, int win_end,
                           bool use_signed_log = true, bool standardize = true);
};

double forward_value(double x, const VarTransform& vt);
double inverse_value(double z, const VarTransform& vt);

// Applies the fitted spec to every variable. Throws Err::SpecNotFitted when
// standardization is requested on an unfitted spec.
DayMatrixSet forward_transform(const DayMatrixSet& set, const TransformSpec& spec);
HourlyPanel forward_transform(const HourlyPanel& panel, const TransformSpec& spec);
HourlyPanel inverse_transform(const HourlyPanel& panel, const TransformSpec& spec);

// Per-day regressor layout (total dimension 248):
//   [0]        scaled day index
//   [1..96]    price days i-1, i-2, i-3, i-7           (4 x 24)
//   [97..168]  residual load days i, i-1, i-7          (3 x 24)
//   [169..240] renewables days i, i-1, i-7             (3 x 24)
//   [241..247] weekday one-hot, Monday first
inline constexpr int kFeatureDim = 248;
inline constexpr int kPriceLags[4] = {1, 2, 3, 7};
inline constexpr int kExoLags[3] = {0, 1, 7};
inline constexpr int kWeekdayOffset = 241;

struct HourDataset {
  Eigen::MatrixXd inputs;   // rows are feature vectors
  Eigen::VectorXd targets;  // transformed price of the row's day at `hour`
  std::vector<int> day_rows;  // day index (into the DayMatrixSet) per row
};

// Training pairs for one hour over the day window [win_begin, win_end]
// (inclusive). The first 7 days only feed lags. Days whose own row or any
// lagged row is invalid are skipped. Throws Err::WindowTooShort when the
// window has fewer than 8 days.
HourDataset build_hour_dataset(const DayMatrixSet& transformed, int hour,
                               int win_begin, int win_end);

// Feature vector for predicting `target_day` (usually win_end + 1) with the
// window's day-index scaling. Requires the target day's load/renewables rows
// and the lagged price rows; never reads the target day's price row. An
// override (day, 24 transformed prices) substitutes a price row that is not
// yet known, for two-day-ahead prediction.
Eigen::VectorXd build_prediction_vector(
    const DayMatrixSet& transformed, int hour, int win_begin, int win_end,
    int target_day,
    const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override = {});

}  // namespace kcast

#endif
