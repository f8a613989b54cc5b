#ifndef KERNELCAST_SVR_HPP
#define KERNELCAST_SVR_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace kcast {

enum class SvrKernel { SquaredExponential, Polynomial, Linear, Sigmoid };

const char* svr_kernel_name(SvrKernel k);
SvrKernel parse_svr_kernel(const std::string& s);

struct SvrConfig {
  double C = 1.0;
  double epsilon = 0.1;
  SvrKernel kernel = SvrKernel::SquaredExponential;
  double gamma = 0.0;  // 0 = auto: 1 / (dim * mean feature variance)
  double coef0 = 0.0;
  int degree = 2;
};

double svr_kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const SvrConfig& cfg);
double resolve_gamma(const Eigen::MatrixXd& X, const SvrConfig& cfg);

struct SvrModel {
  Eigen::MatrixXd train_inputs;
  Eigen::VectorXd dual_coefs;  // alpha_i - alpha_i^* per training point
  double bias = 0;
  std::vector<int> support_index;
  SvrConfig config;  // gamma resolved
  double dual_objective = 0;
  double kkt_violation = 0;
  int passes = 0;
  bool converged = true;
};

// Pairwise coordinate ascent on the dual: repeatedly picks the most KKT-
// violating direction pair and solves the one-dimensional subproblem in
// closed form, until the violation is <= tol and the duality gap is within
// max(1e-3 |dual|, 1e-6), or max_passes sweeps are exhausted (the best
// iterate is then returned with converged = false).
SvrModel solve_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const SvrConfig& cfg, double tol = 1e-3, int max_passes = 200);

// KKT bias: mean over the stationarity estimates of the unbounded support
// vectors; midpoint of the KKT-implied interval when none exist.
double compute_bias(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta, const SvrConfig& cfg);

Eigen::VectorXd predict(const SvrModel& model, const Eigen::MatrixXd& queries);

struct GridSearchResult {
  SvrConfig config;
  double holdout_rmse = 0;
};

// Exhaustive search over kernel in {se, polynomial, linear, sigmoid},
// epsilon in {0.001, 0.01, 0.1}, C in {0.1, 1, 10} and coef0 in {0, 1, 10}
// (polynomial/sigmoid only), scored by RMSE on the last holdout_days rows.
// Ties prefer smaller C, then larger epsilon.
GridSearchResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             int holdout_days, double tol = 1e-3, int max_passes = 200);

}  // namespace kcast

#endif
