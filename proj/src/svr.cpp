#include "kernelcast/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernelcast/errors.hpp"

namespace kcast {

const char* svr_kernel_name(SvrKernel k) {
  switch (k) {
    case SvrKernel::SquaredExponential: return "squared_exponential";
    case SvrKernel::Polynomial: return "polynomial";
    case SvrKernel::Linear: return "linear";
    case SvrKernel::Sigmoid: return "sigmoid";
  }
  return "?";
}

SvrKernel parse_svr_kernel(const std::string& s) {
  if (s == "squared_exponential" || s == "se") return SvrKernel::SquaredExponential;
  if (s == "polynomial" || s == "poly") return SvrKernel::Polynomial;
  if (s == "linear") return SvrKernel::Linear;
  if (s == "sigmoid") return SvrKernel::Sigmoid;
  raise(Err::ConfigError, "unknown svr kernel '" + s + "'");
}

double resolve_gamma(const Eigen::MatrixXd& X, const SvrConfig& cfg) {
  if (cfg.gamma > 0) return cfg.gamma;
  const double d = static_cast<double>(X.cols());
  Eigen::RowVectorXd mean = X.colwise().mean();
  double var = (X.rowwise() - mean).array().square().sum() /
               (static_cast<double>(X.rows()) * d);
  if (var <= 0) return 1.0 / d;
  return 1.0 / (d * var);
}

double svr_kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const SvrConfig& cfg) {
  switch (cfg.kernel) {
    case SvrKernel::SquaredExponential:
      return std::exp(-cfg.gamma * (a - b).squaredNorm());
    case SvrKernel::Polynomial:
      return std::pow(cfg.gamma * a.dot(b) + cfg.coef0, cfg.degree);
    case SvrKernel::Linear:
      return a.dot(b);
    case SvrKernel::Sigmoid:
      return std::tanh(cfg.gamma * a.dot(b) + cfg.coef0);
  }
  return 0;
}

namespace {

Eigen::MatrixXd full_kernel(const Eigen::MatrixXd& X, const SvrConfig& cfg) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = svr_kernel_value(X.row(i), X.row(j), cfg);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

// Exact objective change when moving delta along e_i - e_j.
double objective_delta(double delta, double gi, double gj, double eta, double bi,
                       double bj, double eps) {
  return delta * (gi - gj) - 0.5 * eta * delta * delta -
         eps * (std::abs(bi + delta) - std::abs(bi)) -
         eps * (std::abs(bj - delta) - std::abs(bj));
}

struct PairStep {
  double delta = 0;
  double gain = 0;
};

// Maximizes the concave piecewise-quadratic objective change over
// delta in [0, dmax] with kinks where beta_i or beta_j crosses zero.
PairStep best_step(double gi, double gj, double eta, double bi, double bj, double eps,
                   double dmax) {
  std::vector<double> cand;
  cand.push_back(dmax);
  if (bi < 0 && -bi < dmax) cand.push_back(-bi);
  if (bj > 0 && bj < dmax) cand.push_back(bj);
  // segment-interior stationary points
  std::vector<double> bps{0.0};
  if (bi < 0 && -bi < dmax) bps.push_back(-bi);
  if (bj > 0 && bj < dmax) bps.push_back(bj);
  std::sort(bps.begin(), bps.end());
  bps.push_back(dmax);
  if (eta > 1e-14) {
    for (size_t s = 0; s + 1 < bps.size(); ++s) {
      const double mid = (bps[s] + bps[s + 1]) / 2.0;
      const double si = (bi + mid) >= 0 ? 1.0 : -1.0;
      const double sj = (bj - mid) >= 0 ? 1.0 : -1.0;
      const double stat = (gi - gj - eps * si + eps * sj) / eta;
      if (stat > bps[s] && stat < bps[s + 1]) cand.push_back(stat);
    }
  }
  PairStep out;
  for (double d : cand) {
    if (!(d > 0)) continue;
    const double g = objective_delta(d, gi, gj, eta, bi, bj, eps);
    if (g > out.gain) {
      out.gain = g;
      out.delta = d;
    }
  }
  return out;
}

struct Violation {
  int i = -1, j = -1;
  double value = -std::numeric_limits<double>::infinity();
};

// Most violating direction pair: i may grow, j may shrink, i != j.
Violation max_violation(const Eigen::VectorXd& beta, const Eigen::VectorXd& G, double C,
                        double eps) {
  const int n = static_cast<int>(beta.size());
  int i1 = -1, i2 = -1, j1 = -1, j2 = -1;
  double vi1 = -std::numeric_limits<double>::infinity(), vi2 = vi1;
  double vj1 = vi1, vj2 = vi1;
  for (int k = 0; k < n; ++k) {
    if (beta(k) < C) {
      const double up = G(k) - (beta(k) >= 0 ? eps : -eps);
      if (up > vi1) { vi2 = vi1; i2 = i1; vi1 = up; i1 = k; }
      else if (up > vi2) { vi2 = up; i2 = k; }
    }
    if (beta(k) > -C) {
      const double dn = -G(k) + (beta(k) > 0 ? eps : -eps);
      if (dn > vj1) { vj2 = vj1; j2 = j1; vj1 = dn; j1 = k; }
      else if (dn > vj2) { vj2 = dn; j2 = k; }
    }
  }
  Violation v;
  if (i1 < 0 || j1 < 0) return v;
  if (i1 != j1) {
    v.i = i1; v.j = j1; v.value = vi1 + vj1;
  }
  if (i1 == j1 || (i2 >= 0 && j1 == i1)) {
    // consider the two off-diagonal alternatives
    if (i2 >= 0 && vi2 + vj1 > v.value && i2 != j1) { v.i = i2; v.j = j1; v.value = vi2 + vj1; }
    if (j2 >= 0 && vi1 + vj2 > v.value && i1 != j2) { v.i = i1; v.j = j2; v.value = vi1 + vj2; }
  }
  return v;
}

double dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, double eps) {
  return -0.5 * beta.dot(K * beta) + y.dot(beta) - eps * beta.cwiseAbs().sum();
}

double primal_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, double b, const SvrConfig& cfg) {
  const Eigen::VectorXd f = K * beta;
  double slack = 0;
  for (int i = 0; i < y.size(); ++i)
    slack += std::max(0.0, std::abs(y(i) - f(i) - b) - cfg.epsilon);
  return 0.5 * beta.dot(f) + cfg.C * slack;
}

}  // namespace

double compute_bias(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta, const SvrConfig& cfg) {
  const int n = static_cast<int>(y.size());
  const Eigen::VectorXd G = y - K * beta;
  const double C = cfg.C, eps = cfg.epsilon;
  const double zero_tol = 1e-12 * std::max(1.0, C);
  const double bound_tol = C * 1e-9;

  double sum = 0;
  int cnt = 0;
  for (int i = 0; i < n; ++i) {
    const double b = beta(i);
    if (std::abs(b) <= zero_tol || std::abs(b) >= C - bound_tol) continue;
    sum += b > 0 ? G(i) - eps : G(i) + eps;
    ++cnt;
  }
  if (cnt > 0) return sum / cnt;

  // All coefficients at a bound or zero: take the midpoint of the interval
  // the stationarity conditions leave for b.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double b = beta(i);
    if (std::abs(b) <= zero_tol) {
      lo = std::max(lo, G(i) - eps);
      hi = std::min(hi, G(i) + eps);
    } else if (b >= C - bound_tol) {
      hi = std::min(hi, G(i) - eps);
    } else if (b <= -C + bound_tol) {
      lo = std::max(lo, G(i) + eps);
    }
  }
  if (!std::isfinite(lo) && !std::isfinite(hi)) return 0.0;
  if (!std::isfinite(lo)) return hi;
  if (!std::isfinite(hi)) return lo;
  return (lo + hi) / 2.0;
}

SvrModel solve_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const SvrConfig& cfg_in, double tol, int max_passes) {
  const int n = static_cast<int>(X.rows());
  if (n < 2) raise(Err::ConfigError, "solve_dual needs at least 2 training pairs");
  if (X.rows() != y.size()) raise(Err::DimensionMismatch, "inputs vs targets length");

  SvrConfig cfg = cfg_in;
  cfg.gamma = resolve_gamma(X, cfg_in);
  const Eigen::MatrixXd K = full_kernel(X, cfg);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = y;  // y - K beta
  const long max_updates = static_cast<long>(max_passes) * n;
  long updates = 0;
  double work_tol = tol;
  double violation = 0;
  bool converged = false;

  while (updates < max_updates) {
    Violation v = max_violation(beta, G, cfg.C, cfg.epsilon);
    violation = v.i >= 0 ? v.value : 0.0;
    if (v.i < 0 || v.value <= work_tol) {
      // KKT reached at work_tol; accept if the duality gap is small enough,
      // otherwise polish with a tighter tolerance.
      const double dobj = dual_objective(K, y, beta, cfg.epsilon);
      const double b = compute_bias(K, y, beta, cfg);
      const double gap = primal_objective(K, y, beta, b, cfg) - dobj;
      if (gap <= std::max(1e-3 * std::abs(dobj), 1e-6) || work_tol < 1e-12) {
        converged = true;
        break;
      }
      work_tol *= 0.1;
      continue;
    }
    const int i = v.i, j = v.j;
    const double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
    const double dmax = std::min(cfg.C - beta(i), beta(j) + cfg.C);
    PairStep step = best_step(G(i), G(j), eta, beta(i), beta(j), cfg.epsilon, dmax);
    if (step.gain <= 0) break;  // indefinite kernel corner; stop at best iterate
    beta(i) += step.delta;
    beta(j) -= step.delta;
    G -= step.delta * (K.col(i) - K.col(j));
    ++updates;
  }

  SvrModel m;
  m.train_inputs = X;
  m.dual_coefs = beta;
  m.config = cfg;
  m.bias = compute_bias(K, y, beta, cfg);
  m.dual_objective = dual_objective(K, y, beta, cfg.epsilon);
  {
    Violation v = max_violation(beta, G, cfg.C, cfg.epsilon);
    m.kkt_violation = v.i >= 0 ? std::max(0.0, v.value) : 0.0;
  }
  m.passes = static_cast<int>((updates + n - 1) / n);
  m.converged = converged;
  for (int i = 0; i < n; ++i)
    if (std::abs(beta(i)) > 1e-12) m.support_index.push_back(i);
  return m;
}

Eigen::VectorXd predict(const SvrModel& model, const Eigen::MatrixXd& queries) {
  if (queries.cols() != model.train_inputs.cols())
    raise(Err::DimensionMismatch, "query dim vs train dim");
  Eigen::VectorXd out(queries.rows());
  for (int q = 0; q < queries.rows(); ++q) {
    double s = model.bias;
    for (int idx : model.support_index)
      s += model.dual_coefs(idx) *
           svr_kernel_value(model.train_inputs.row(idx), queries.row(q), model.config);
    out(q) = s;
  }
  return out;
}

GridSearchResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             int holdout_days, double tol, int max_passes) {
  const int n = static_cast<int>(X.rows());
  if (holdout_days < 1 || n - holdout_days < 2)
    raise(Err::WindowTooShort,
          "grid search needs >= 2 train rows plus " + std::to_string(holdout_days) +
              " holdout rows, have " + std::to_string(n));
  const int ntrain = n - holdout_days;
  const Eigen::MatrixXd Xtr = X.topRows(ntrain);
  const Eigen::VectorXd ytr = y.head(ntrain);
  const Eigen::MatrixXd Xho = X.bottomRows(holdout_days);
  const Eigen::VectorXd yho = y.tail(holdout_days);

  static const SvrKernel kernels[] = {SvrKernel::SquaredExponential, SvrKernel::Polynomial,
                                      SvrKernel::Linear, SvrKernel::Sigmoid};
  static const double eps_grid[] = {0.001, 0.01, 0.1};
  static const double c_grid[] = {0.1, 1.0, 10.0};
  static const double coef0_grid[] = {0.0, 1.0, 10.0};

  GridSearchResult best;
  best.holdout_rmse = std::numeric_limits<double>::infinity();
  bool have = false;
  for (SvrKernel kern : kernels) {
    const bool uses_coef0 = kern == SvrKernel::Polynomial || kern == SvrKernel::Sigmoid;
    const int ncoef = uses_coef0 ? 3 : 1;
    for (int ci = 0; ci < ncoef; ++ci) {
      for (double eps : eps_grid) {
        for (double C : c_grid) {
          SvrConfig cfg;
          cfg.kernel = kern;
          cfg.epsilon = eps;
          cfg.C = C;
          cfg.coef0 = uses_coef0 ? coef0_grid[ci] : 0.0;
          SvrModel m = solve_dual(Xtr, ytr, cfg, tol, max_passes);
          const Eigen::VectorXd pred = predict(m, Xho);
          const double rmse = std::sqrt((pred - yho).squaredNorm() / holdout_days);
          // ties prefer smaller C, then larger epsilon
          const bool better =
              !have || rmse < best.holdout_rmse ||
              (rmse == best.holdout_rmse &&
               (cfg.C < best.config.C ||
                (cfg.C == best.config.C && cfg.epsilon > best.config.epsilon)));
          if (better) {
            best.config = cfg;
            best.config.gamma = 0.0;  // stay auto; refits resolve on their window
            best.holdout_rmse = rmse;
            have = true;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace kcast
