#ifndef KERNELCAST_GPR_HPP
#define KERNELCAST_GPR_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "kernelcast/kernels.hpp"

namespace kcast {

// Pairwise distances and centered targets for one training set; all
// likelihood work happens on this.
struct GprProblem {
  Eigen::MatrixXd distances;
  Eigen::VectorXd y;  // centered targets
  double y_mean = 0;

  static GprProblem from_data(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);
};

// log p(y | X, theta) = -1/2 y'(K+s^2 I)^-1 y - 1/2 log|K+s^2 I| - n/2 log 2pi,
// evaluated through a Cholesky factor. Throws Err::NotFactorizable.
double log_marginal_likelihood(const GprProblem& prob, const KernelParams& p,
                               const KernelSelector& sel);

// Gradient over the packed log-parameters (ordering per gram_gradient_names).
Eigen::VectorXd lml_gradient(const GprProblem& prob, const KernelParams& p,
                             const KernelSelector& sel);

struct GprOptions {
  KernelSelector kernel{};
  int restarts = 5;
  std::uint64_t seed = 0;
  int max_iters = 150;
  double grad_tol = 1e-6;
  double sigma_n_floor = 1e-6;
};

struct GprModel {
  Eigen::MatrixXd train_inputs;
  Eigen::VectorXd train_targets;
  KernelParams params;
  KernelSelector kernel;
  Eigen::MatrixXd factor;   // lower Cholesky of K + sigma_n^2 I (+ jitter)
  Eigen::VectorXd weights;  // (K + sigma_n^2 I)^-1 (y - target_mean)
  double target_mean = 0;
  double jitter = 0;
  double final_lml = 0;
  int iterations = 0;
  bool converged = true;
};

// Maximum-likelihood fit: `restarts` BFGS ascents from seeded random
// log-parameter initializations; the best final likelihood wins.
// Throws Err::AllRestartsFailed if no start is even factorizable.
GprModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
             const GprOptions& opts);

// Rebuilds the posterior on new data keeping the hyperparameters.
GprModel refit(const GprModel& hyper_source, const Eigen::MatrixXd& inputs,
               const Eigen::VectorXd& targets);

struct GprPrediction {
  double mean = 0;
  double variance = 0;  // clamped at 0
  double lower = 0;
  double upper = 0;
};

// Posterior mean/variance per query row plus the central interval at level
// 1 - alpha. Throws Err::DimensionMismatch on a feature-width mismatch.
std::vector<GprPrediction> predict(const GprModel& model, const Eigen::MatrixXd& queries,
                                   double alpha = 0.05);

}  // namespace kcast

#endif
