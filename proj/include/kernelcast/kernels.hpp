#ifndef KERNELCAST_KERNELS_HPP
#define KERNELCAST_KERNELS_HPP

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace kcast {

struct PeriodicParams {
  double period = 1.0;
  double ell_lp = 1.0;
  double sigma_lp = 1.0;
};

// All strictly positive parameters live in log space so positivity is
// structural; accessors exponentiate.
struct KernelParams {
  double log_sigma_se = 0;
  double log_ell_se = 0;
  double log_sigma_rq = 0;
  double log_ell_rq = 0;
  double log_alpha_rq = 0;
  double log_sigma_n = 0;
  std::optional<std::array<double, 3>> log_periodic;  // log p, log ell_lp, log sigma_lp

  static KernelParams from_values(double sigma_se, double ell_se, double sigma_rq,
                                  double ell_rq, double alpha_rq, double sigma_n,
                                  std::optional<PeriodicParams> periodic = {});

  double sigma_se() const { return std::exp(log_sigma_se); }
  double ell_se() const { return std::exp(log_ell_se); }
  double sigma_rq() const { return std::exp(log_sigma_rq); }
  double ell_rq() const { return std::exp(log_ell_rq); }
  double alpha_rq() const { return std::exp(log_alpha_rq); }
  double sigma_n() const { return std::exp(log_sigma_n); }
  PeriodicParams periodic() const;
};

// Which additive components are active.
struct KernelSelector {
  bool se = true;
  bool rq = true;
  bool lp = false;

  static KernelSelector parse(const std::string& s);  // "se" | "rq" | "se+rq" | "se+rq+lp"
  std::string name() const;
};

enum class KernelKind { SquaredExponential, RationalQuadratic, Sum };

double k_se(double r, const KernelParams& p);
double k_rq(double r, const KernelParams& p);
double k_local_periodic(double r, const KernelParams& p);  // Err::PeriodicParamsMissing
double kernel_value(double r, const KernelParams& p, const KernelSelector& sel);

// Closed-form d^order K / dr^order for the SE, RQ, or summed kernel.
double kernel_derivative(double r, const KernelParams& p, int order, KernelKind which);

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X);
Eigen::MatrixXd cross_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct GramMatrix {
  Eigen::MatrixXd values;      // raw kernel values, no jitter on the diagonal
  double jitter_applied = 0.0; // amount that made values + jitter*I factorizable

  Eigen::MatrixXd jittered() const {
    Eigen::MatrixXd m = values;
    m.diagonal().array() += jitter_applied;
    return m;
  }
};

Eigen::MatrixXd gram_values(const Eigen::MatrixXd& distances, const KernelParams& p,
                            const KernelSelector& sel);

// Builds the Gram matrix over the inputs (rows) and escalates diagonal
// jitter 1e-10, 1e-9, ..., 1e-4 until a Cholesky factorization succeeds.
// Throws Err::NotFactorizable after the ladder is exhausted.
GramMatrix gram(const Eigen::MatrixXd& inputs, const KernelParams& p,
                const KernelSelector& sel);

// dK/d(log theta) for every active log-parameter, ordered as packed by the
// optimizer; the last entry is always d/d(log sigma_n) = 2 sigma_n^2 I.
std::vector<Eigen::MatrixXd> gram_log_gradients(const Eigen::MatrixXd& distances,
                                                const KernelParams& p,
                                                const KernelSelector& sel);
std::vector<std::string> gram_gradient_names(const KernelSelector& sel);

struct InsignificanceResult {
  long count = 0;
  double fraction = 0;
};

// Min-max scales the matrix to [0,1] and counts entries below the threshold.
// Throws Err::ConstantMatrix when max == min.
InsignificanceResult insignificance_fraction(const Eigen::MatrixXd& gram_values,
                                             double threshold = 0.2);

}  // namespace kcast

#endif
