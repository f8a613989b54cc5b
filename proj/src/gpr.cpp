#include "kernelcast/gpr.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "kernelcast/errors.hpp"
#include "kernelcast/rng.hpp"
#include "kernelcast/stats.hpp"

namespace kcast {

namespace {

constexpr double kLogLo = -13.815510557964274;  // log(1e-6)
constexpr double kLogHi = 13.815510557964274;   // log(1e6)

int packed_size(const KernelSelector& sel) {
  return (sel.se ? 2 : 0) + (sel.rq ? 3 : 0) + (sel.lp ? 3 : 0) + 1;
}

Eigen::VectorXd pack(const KernelParams& p, const KernelSelector& sel) {
  Eigen::VectorXd v(packed_size(sel));
  int k = 0;
  if (sel.se) {
    v(k++) = p.log_sigma_se;
    v(k++) = p.log_ell_se;
  }
  if (sel.rq) {
    v(k++) = p.log_sigma_rq;
    v(k++) = p.log_ell_rq;
    v(k++) = p.log_alpha_rq;
  }
  if (sel.lp) {
    v(k++) = (*p.log_periodic)[0];
    v(k++) = (*p.log_periodic)[1];
    v(k++) = (*p.log_periodic)[2];
  }
  v(k) = p.log_sigma_n;
  return v;
}

KernelParams unpack(const Eigen::VectorXd& v, const KernelSelector& sel) {
  KernelParams p;
  int k = 0;
  if (sel.se) {
    p.log_sigma_se = v(k++);
    p.log_ell_se = v(k++);
  }
  if (sel.rq) {
    p.log_sigma_rq = v(k++);
    p.log_ell_rq = v(k++);
    p.log_alpha_rq = v(k++);
  }
  if (sel.lp) {
    p.log_periodic = {v(k), v(k + 1), v(k + 2)};
    k += 3;
  }
  p.log_sigma_n = v(k);
  return p;
}

// Cholesky of K + sigma_n^2 I with the same jitter ladder as gram().
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0;
};

bool factorize(const Eigen::MatrixXd& D, const KernelParams& p, const KernelSelector& sel,
               Factorization& out) {
  Eigen::MatrixXd K = gram_values(D, p, sel);
  const double sn2 = p.sigma_n() * p.sigma_n();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += sn2 + jitter;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return true;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
  }
  return false;
}

double lml_from_factor(const Factorization& f, const Eigen::VectorXd& y,
                       Eigen::VectorXd* weights_out = nullptr) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd w = f.llt.solve(y);
  if (weights_out) *weights_out = w;
  const double quad = y.dot(w);
  const double logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace

GprProblem GprProblem::from_data(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  GprProblem prob;
  prob.distances = pairwise_distances(inputs);
  prob.y_mean = targets.mean();
  prob.y = targets.array() - prob.y_mean;
  return prob;
}

double log_marginal_likelihood(const GprProblem& prob, const KernelParams& p,
                               const KernelSelector& sel) {
  Factorization f;
  if (!factorize(prob.distances, p, sel, f))
    raise(Err::NotFactorizable, "K + sigma_n^2 I is not positive definite");
  return lml_from_factor(f, prob.y);
}

Eigen::VectorXd lml_gradient(const GprProblem& prob, const KernelParams& p,
                             const KernelSelector& sel) {
  Factorization f;
  if (!factorize(prob.distances, p, sel, f))
    raise(Err::NotFactorizable, "K + sigma_n^2 I is not positive definite");
  const int n = static_cast<int>(prob.y.size());
  Eigen::VectorXd w = f.llt.solve(prob.y);
  Eigen::MatrixXd Ainv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  // 1/2 tr((w w' - A^-1) dK/dtheta), evaluated as an elementwise product.
  Eigen::MatrixXd M = w * w.transpose() - Ainv;
  auto grads = gram_log_gradients(prob.distances, p, sel);
  Eigen::VectorXd g(static_cast<int>(grads.size()));
  for (size_t k = 0; k < grads.size(); ++k)
    g(static_cast<int>(k)) = 0.5 * M.cwiseProduct(grads[k]).sum();
  return g;
}

namespace {

struct Objective {
  const GprProblem& prob;
  const KernelSelector& sel;
  double sigma_n_floor;

  // minimizes -LML
  double value(const Eigen::VectorXd& v) const {
    KernelParams p = unpack(v, sel);
    Factorization f;
    if (!factorize(prob.distances, p, sel, f))
      return std::numeric_limits<double>::infinity();
    return -lml_from_factor(f, prob.y);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& v) const {
    return -lml_gradient(prob, unpack(v, sel), sel);
  }

  void clamp(Eigen::VectorXd& v) const {
    for (int i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i), kLogLo, kLogHi);
    const double floor_log = std::log(sigma_n_floor);
    if (v(v.size() - 1) < floor_log) v(v.size() - 1) = floor_log;
  }
};

struct BfgsResult {
  Eigen::VectorXd x;
  double fx = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool ever_evaluated = false;
};

BfgsResult bfgs_minimize(const Objective& obj, Eigen::VectorXd x0, int max_iters,
                         double grad_tol) {
  BfgsResult res;
  obj.clamp(x0);
  const int d = static_cast<int>(x0.size());
  double fx = obj.value(x0);
  if (!std::isfinite(fx)) return res;
  res.ever_evaluated = true;
  Eigen::VectorXd g = obj.gradient(x0);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd x = x0;

  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(H * g);
    double gd = g.dot(dir);
    if (gd >= 0) {  // not a descent direction; reset
      H.setIdentity();
      dir = -g;
      gd = g.dot(dir);
    }
    // Armijo backtracking
    double t = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + t * dir;
      obj.clamp(x_new);
      f_new = obj.value(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd g_new = obj.gradient(x_new);
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
      const double rho = 1.0 / sy;
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    } else {
      H.setIdentity();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  if (g.lpNorm<Eigen::Infinity>() <= grad_tol) res.converged = true;
  res.x = x;
  res.fx = fx;
  return res;
}

double median_positive_distance(const Eigen::MatrixXd& D) {
  std::vector<double> v;
  v.reserve(static_cast<size_t>(D.rows()) * (D.rows() - 1) / 2);
  for (int i = 0; i < D.rows(); ++i)
    for (int j = i + 1; j < D.cols(); ++j)
      if (D(i, j) > 0) v.push_back(D(i, j));
  if (v.empty()) return 1.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

GprModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
             const GprOptions& opts) {
  if (inputs.rows() < 8) raise(Err::WindowTooShort, "need at least 8 training pairs");
  if (inputs.rows() != targets.size())
    raise(Err::DimensionMismatch, "inputs vs targets length");

  GprProblem prob = GprProblem::from_data(inputs, targets);
  const double y_std = std::max(std::sqrt(prob.y.squaredNorm() / prob.y.size()), 1e-8);
  const double d_med = median_positive_distance(prob.distances);
  Objective obj{prob, opts.kernel, opts.sigma_n_floor};

  const int d = packed_size(opts.kernel);
  const auto names = gram_gradient_names(opts.kernel);
  BfgsResult best;
  int total_iters = 0;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    RngStream rs = make_stream(opts.seed, 0x6770ULL, static_cast<std::uint64_t>(r));
    Eigen::VectorXd x0(d);
    for (int k = 0; k < d; ++k) {
      double scale = 1.0;
      const std::string& nm = names[static_cast<size_t>(k)];
      if (nm == "log_sigma_se" || nm == "log_sigma_rq" || nm == "log_sigma_n") scale = y_std;
      if (nm == "log_ell_se" || nm == "log_ell_rq" || nm == "log_period" ||
          nm == "log_ell_lp" || nm == "log_sigma_lp")
        scale = d_med;
      x0(k) = rs.uniform(std::log(0.1), std::log(10.0)) + std::log(scale);
    }
    // keep the noise start modest so interpolation is not drowned at init
    x0(d - 1) = std::min(x0(d - 1), std::log(y_std));
    BfgsResult r_out = bfgs_minimize(obj, x0, opts.max_iters, opts.grad_tol);
    if (!r_out.ever_evaluated) continue;
    total_iters += r_out.iterations;
    if (r_out.fx < best.fx) best = r_out;
  }
  if (!std::isfinite(best.fx)) raise(Err::AllRestartsFailed, "no restart reached a factorizable state");

  GprModel model;
  model.kernel = opts.kernel;
  model.params = unpack(best.x, opts.kernel);
  model.iterations = total_iters;
  model.converged = best.converged;
  model.final_lml = -best.fx;

  GprModel fitted = refit(model, inputs, targets);
  fitted.iterations = total_iters;
  fitted.converged = best.converged;
  return fitted;
}

GprModel refit(const GprModel& hyper_source, const Eigen::MatrixXd& inputs,
               const Eigen::VectorXd& targets) {
  GprModel m;
  m.kernel = hyper_source.kernel;
  m.params = hyper_source.params;
  m.final_lml = hyper_source.final_lml;
  m.iterations = hyper_source.iterations;
  m.converged = hyper_source.converged;
  m.train_inputs = inputs;
  m.train_targets = targets;
  m.target_mean = targets.mean();

  Eigen::MatrixXd D = pairwise_distances(inputs);
  Factorization f;
  if (!factorize(D, m.params, m.kernel, f))
    raise(Err::NotFactorizable, "fitted kernel not factorizable on this window");
  m.jitter = f.jitter;
  m.factor = f.llt.matrixL();
  m.weights = f.llt.solve((targets.array() - m.target_mean).matrix());
  Eigen::VectorXd dummy;
  m.final_lml = lml_from_factor(f, (targets.array() - m.target_mean).matrix(), &dummy);
  return m;
}

std::vector<GprPrediction> predict(const GprModel& model, const Eigen::MatrixXd& queries,
                                   double alpha) {
  if (queries.cols() != model.train_inputs.cols())
    raise(Err::DimensionMismatch,
          "query dim " + std::to_string(queries.cols()) + " vs train dim " +
              std::to_string(model.train_inputs.cols()));
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const Eigen::MatrixXd Dx = cross_distances(model.train_inputs, queries);
  Eigen::MatrixXd Kx(Dx.rows(), Dx.cols());
  for (int i = 0; i < Dx.rows(); ++i)
    for (int j = 0; j < Dx.cols(); ++j)
      Kx(i, j) = kernel_value(Dx(i, j), model.params, model.kernel);
  const double k0 = kernel_value(0.0, model.params, model.kernel);

  auto L = model.factor.triangularView<Eigen::Lower>();
  std::vector<GprPrediction> out(static_cast<size_t>(queries.rows()));
  for (int j = 0; j < queries.rows(); ++j) {
    GprPrediction pr;
    pr.mean = model.target_mean + Kx.col(j).dot(model.weights);
    Eigen::VectorXd v = L.solve(Kx.col(j));
    pr.variance = std::max(0.0, k0 - v.squaredNorm());
    const double half = z * std::sqrt(pr.variance);
    pr.lower = pr.mean - half;
    pr.upper = pr.mean + half;
    out[static_cast<size_t>(j)] = pr;
  }
  return out;
}

}  // namespace kcast
