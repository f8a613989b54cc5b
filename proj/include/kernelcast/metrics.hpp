#ifndef KERNELCAST_METRICS_HPP
#define KERNELCAST_METRICS_HPP

#include <Eigen/Core>
#include <vector>

#include "kernelcast/conformal.hpp"  // Interval

namespace kcast {

// Per-day error metrics over the day's m hours. The percentage metrics come
// in two flavors: the *_sqrt values take an outer square root over the mean
// of the summands (the headline definition used throughout the reports), the
// *_plain values are the conventional means. MAPE terms with |truth| < 1e-6
// are skipped and counted.
struct DailyMetrics {
  double rmse = 0;
  double mae = 0;
  double mape_sqrt = 0;
  double mape_plain = 0;
  double smape_sqrt = 0;
  double smape_plain = 0;
  int mape_skipped = 0;
};

DailyMetrics daily_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted);

double error_score(const std::vector<double>& daily_values);  // mean over days

double picp(const Eigen::VectorXd& truth, const std::vector<Interval>& intervals);
double mpiw(const std::vector<Interval>& intervals);

struct DmResult {
  double statistic = 0;
  double p_value = 1;
  int lag = 0;
};

// Diebold-Mariano equal-accuracy test on two daily loss series: the mean
// loss differential studentized by its Bartlett long-run variance with lag
// floor(n^(1/3)), against a two-sided normal. Throws Err::ZeroVariance when
// the differential series is constant.
DmResult dm_test(const std::vector<double>& loss_a, const std::vector<double>& loss_b);

struct FriedmanResult {
  double statistic = 0;
  double p_value = 1;
  std::vector<double> mean_ranks;  // per model
  Eigen::MatrixXd nemenyi_p;       // pairwise, 1 on the diagonal
};

// Friedman rank test over a blocks x models loss matrix (average ranks on
// ties, chi-square approximation with tie correction) plus the Nemenyi
// post-hoc pairwise p-value matrix from the studentized range.
FriedmanResult friedman_nemenyi(const Eigen::MatrixXd& losses);

}  // namespace kcast

#endif
