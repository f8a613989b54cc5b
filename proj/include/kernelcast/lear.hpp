#ifndef KERNELCAST_LEAR_HPP
#define KERNELCAST_LEAR_HPP

#include <Eigen/Core>
#include <vector>

#include "kernelcast/dataset.hpp"

namespace kcast {

// Regressor layout for the hour-h autoregressive benchmark (247 columns):
//   [0..95]    price days i-1, i-2, i-3, i-7     (4 x 24)
//   [96..167]  residual load days i, i-1, i-7    (3 x 24)
//   [168..239] renewables days i, i-1, i-7       (3 x 24)
//   [240..246] weekday one-hot, Monday first
inline constexpr int kLearDim = 247;

struct LearDesign {
  Eigen::MatrixXd X;  // standardized columns
  Eigen::VectorXd y;  // centered targets
  Eigen::VectorXd col_mean;
  Eigen::VectorXd col_std;  // 1 for constant columns
  double y_mean = 0;
  std::vector<int> day_rows;
};

LearDesign build_design(const DayMatrixSet& transformed, int hour, int win_begin,
                        int win_end);

// Builds the (unstandardized) regressor row for predicting target_day.
Eigen::VectorXd build_lear_row(
    const DayMatrixSet& transformed, int target_day,
    const std::optional<std::pair<int, Eigen::RowVectorXd>>& price_override = {});

struct CdResult {
  Eigen::VectorXd theta;
  bool converged = true;
  int cycles = 0;
};

// Cyclic soft-threshold coordinate descent on
//   (1/2n) ||y - X theta||^2 + lambda ||theta||_1
// for standardized columns; stops when the largest coefficient change in a
// full cycle is <= tol.
CdResult coordinate_descent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double lambda, double tol = 1e-8, int max_cycles = 1000,
                            const Eigen::VectorXd* warm_start = nullptr);

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& theta, double lambda);

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Log-spaced grid of `count` values from lmax down `decades` decades.
std::vector<double> lambda_grid(double lmax, int count = 50, double decades = 4.0);

// Warm-started path over the grid; picks the minimum holdout RMSE (the last
// holdout_days rows), ties toward larger lambda.
double select_lambda(const LearDesign& design, const std::vector<double>& grid,
                     int holdout_days);

struct LearModel {
  Eigen::VectorXd theta;  // on standardized columns
  double intercept = 0;   // = training-target mean
  Eigen::VectorXd col_mean;
  Eigen::VectorXd col_std;
  double lambda = 0;
  int hour = 0;
  bool converged = true;
};

LearModel fit_lear(const LearDesign& design, double lambda, int hour);
double predict(const LearModel& model, const Eigen::VectorXd& raw_row);

}  // namespace kcast

#endif
