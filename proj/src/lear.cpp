#include "kernelcast/lear.hpp"

#include <algorithm>
#include <cmath>

#include "kernelcast/errors.hpp"

namespace kcast {

namespace {

void fill_lear_row(Eigen::Ref<Eigen::VectorXd> f, const DayMatrixSet& set, int day,
                   const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override) {
  int k = 0;
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
  f.segment(240, 7).setZero();
  f(240 + weekday_mon0(set.date_of(day))) = 1.0;
}

bool row_days_valid(const DayMatrixSet& set, int day) {
  for (int lag : kPriceLags)
    if (!set.valid[day - lag]) return false;
  for (int lag : kExoLags)
    if (!set.valid[day - lag]) return false;
  return set.valid[day];
}

}  // namespace

Eigen::VectorXd build_lear_row(
    const DayMatrixSet& transformed, int target_day,
    const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override) {
  if (target_day - 7 < 0 || target_day >= transformed.days())
    raise(Err::LagUnavailable, "target day out of range");
  Eigen::VectorXd f(kLearDim);
  fill_lear_row(f, transformed, target_day, price_override);
  return f;
}

LearDesign build_design(const DayMatrixSet& transformed, int hour, int win_begin,
                        int win_end) {
  if (win_begin < 0 || win_end >= transformed.days())
    raise(Err::WindowTooShort, "window out of range");
  if (win_end - win_begin + 1 < 8)
    raise(Err::WindowTooShort, "window needs at least 8 days");

  std::vector<int> rows;
  for (int i = win_begin + 7; i <= win_end; ++i)
    if (row_days_valid(transformed, i)) rows.push_back(i);

  LearDesign d;
  const int n = static_cast<int>(rows.size());
  d.X.resize(n, kLearDim);
  d.y.resize(n);
  d.day_rows = rows;
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd f(kLearDim);
    fill_lear_row(f, transformed, rows[r], {});
    d.X.row(r) = f.transpose();
    d.y(r) = transformed.price(rows[r], hour);
  }

  d.col_mean = d.X.colwise().mean();
  d.col_std.resize(kLearDim);
  for (int j = 0; j < kLearDim; ++j) {
    const double var = (d.X.col(j).array() - d.col_mean(j)).square().sum() / n;
    d.col_std(j) = var > 0 ? std::sqrt(var) : 1.0;
    d.X.col(j) = (d.X.col(j).array() - d.col_mean(j)) / d.col_std(j);
  }
  d.y_mean = d.y.mean();
  d.y.array() -= d.y_mean;
  return d;
}

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& theta, double lambda) {
  const double n = static_cast<double>(X.rows());
  return (y - X * theta).squaredNorm() / (2.0 * n) + lambda * theta.cwiseAbs().sum();
}

CdResult coordinate_descent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double lambda, double tol, int max_cycles,
                            const Eigen::VectorXd* warm_start) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  CdResult res;
  res.theta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  if (warm_start && warm_start->size() != p)
    raise(Err::DimensionMismatch, "warm start length");

  Eigen::VectorXd col_sq(p);
  for (int j = 0; j < p; ++j) col_sq(j) = X.col(j).squaredNorm() / n;
  Eigen::VectorXd resid = y - X * res.theta;

  res.converged = false;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    res.cycles = cycle + 1;
    double max_change = 0;
    for (int j = 0; j < p; ++j) {
      if (col_sq(j) <= 0) continue;  // constant column stays at zero
      const double old = res.theta(j);
      const double rho = old * col_sq(j) + X.col(j).dot(resid) / n;
      double next = 0;
      if (rho > lambda)
        next = (rho - lambda) / col_sq(j);
      else if (rho < -lambda)
        next = (rho + lambda) / col_sq(j);
      if (next != old) {
        resid += X.col(j) * (old - next);
        res.theta(j) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    if (max_change <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

std::vector<double> lambda_grid(double lmax, int count, double decades) {
  std::vector<double> grid(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    grid[static_cast<size_t>(i)] =
        lmax * std::pow(10.0, -decades * i / static_cast<double>(count - 1));
  return grid;
}

double select_lambda(const LearDesign& design, const std::vector<double>& grid,
                     int holdout_days) {
  const int n = static_cast<int>(design.X.rows());
  if (holdout_days < 1 || n - holdout_days < 2)
    raise(Err::WindowTooShort, "not enough rows to carve out the holdout");
  if (grid.empty()) raise(Err::ConfigError, "empty lambda grid");
  if (grid.size() == 1) return grid[0];

  const int ntrain = n - holdout_days;
  const Eigen::MatrixXd Xtr = design.X.topRows(ntrain);
  const Eigen::VectorXd ytr = design.y.head(ntrain);
  const Eigen::MatrixXd Xho = design.X.bottomRows(holdout_days);
  const Eigen::VectorXd yho = design.y.tail(holdout_days);

  double best_lambda = grid[0];
  double best_rmse = std::numeric_limits<double>::infinity();
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(design.X.cols());
  for (double lam : grid) {
    CdResult cd = coordinate_descent(Xtr, ytr, lam, 1e-8, 1000, &warm);
    warm = cd.theta;
    const double rmse = std::sqrt((yho - Xho * cd.theta).squaredNorm() / holdout_days);
    if (rmse < best_rmse) {  // ties keep the earlier (larger) lambda
      best_rmse = rmse;
      best_lambda = lam;
    }
  }
  return best_lambda;
}

LearModel fit_lear(const LearDesign& design, double lambda, int hour) {
  LearModel m;
  CdResult cd = coordinate_descent(design.X, design.y, lambda);
  m.theta = cd.theta;
  m.converged = cd.converged;
  m.intercept = design.y_mean;
  m.col_mean = design.col_mean;
  m.col_std = design.col_std;
  m.lambda = lambda;
  m.hour = hour;
  return m;
}

double predict(const LearModel& model, const Eigen::VectorXd& raw_row) {
  if (raw_row.size() != model.theta.size())
    raise(Err::DimensionMismatch, "regressor row length");
  double s = model.intercept;
  for (int j = 0; j < raw_row.size(); ++j)
    s += model.theta(j) * (raw_row(j) - model.col_mean(j)) / model.col_std(j);
  return s;
}

}  // namespace kcast
