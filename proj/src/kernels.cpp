#include "kernelcast/kernels.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "kernelcast/errors.hpp"

namespace kcast {

KernelParams KernelParams::from_values(double sigma_se, double ell_se, double sigma_rq,
                                       double ell_rq, double alpha_rq, double sigma_n,
                                       std::optional<PeriodicParams> periodic) {
  auto checked_log = [](double v, const char* name) {
    if (!(v > 0)) raise(Err::ConfigError, std::string(name) + " must be > 0");
    return std::log(v);
  };
  KernelParams p;
  p.log_sigma_se = checked_log(sigma_se, "sigma_se");
  p.log_ell_se = checked_log(ell_se, "ell_se");
  p.log_sigma_rq = checked_log(sigma_rq, "sigma_rq");
  p.log_ell_rq = checked_log(ell_rq, "ell_rq");
  p.log_alpha_rq = checked_log(alpha_rq, "alpha_rq");
  // sigma_n = 0 is permitted; it maps to the bottom of the log scale.
  p.log_sigma_n = sigma_n > 0 ? std::log(sigma_n) : std::log(1e-12);
  if (periodic) {
    p.log_periodic = {checked_log(periodic->period, "period"),
                      checked_log(periodic->ell_lp, "ell_lp"),
                      checked_log(periodic->sigma_lp, "sigma_lp")};
  }
  return p;
}

PeriodicParams KernelParams::periodic() const {
  if (!log_periodic) raise(Err::PeriodicParamsMissing, "no periodic block configured");
  return PeriodicParams{std::exp((*log_periodic)[0]), std::exp((*log_periodic)[1]),
                        std::exp((*log_periodic)[2])};
}

KernelSelector KernelSelector::parse(const std::string& s) {
  if (s == "se") return {true, false, false};
  if (s == "rq") return {false, true, false};
  if (s == "se+rq" || s == "sum") return {true, true, false};
  if (s == "se+rq+lp") return {true, true, true};
  raise(Err::ConfigError, "unknown kernel selector '" + s + "'");
}

std::string KernelSelector::name() const {
  std::string out;
  if (se) out = "se";
  if (rq) out += out.empty() ? "rq" : "+rq";
  if (lp) out += out.empty() ? "lp" : "+lp";
  return out;
}

double k_se(double r, const KernelParams& p) {
  const double s = p.sigma_se(), l = p.ell_se();
  return s * s * std::exp(-r * r / (2.0 * l * l));
}

double k_rq(double r, const KernelParams& p) {
  const double s = p.sigma_rq(), l = p.ell_rq(), a = p.alpha_rq();
  const double u = r * r / (2.0 * a * l * l);
  return s * s * std::exp(-a * std::log1p(u));
}

double k_local_periodic(double r, const KernelParams& p) {
  const PeriodicParams lp = p.periodic();
  const double sp = std::sin(M_PI * r / lp.period);
  return std::exp(-2.0 * sp * sp / (lp.ell_lp * lp.ell_lp)) *
         std::exp(-r * r / (2.0 * lp.sigma_lp * lp.sigma_lp));
}

double kernel_value(double r, const KernelParams& p, const KernelSelector& sel) {
  double v = 0;
  if (sel.se) v += k_se(r, p);
  if (sel.rq) v += k_rq(r, p);
  if (sel.lp) v += k_local_periodic(r, p);
  return v;
}

namespace {

double d1_se(double r, const KernelParams& p) {
  const double s = p.sigma_se(), l = p.ell_se();
  return s * s * (-r / (l * l)) * std::exp(-r * r / (2.0 * l * l));
}

double d2_se(double r, const KernelParams& p) {
  const double s = p.sigma_se(), l = p.ell_se();
  return s * s * (r * r / (l * l * l * l) - 1.0 / (l * l)) *
         std::exp(-r * r / (2.0 * l * l));
}

double d1_rq(double r, const KernelParams& p) {
  const double s = p.sigma_rq(), l = p.ell_rq(), a = p.alpha_rq();
  const double u = r * r / (2.0 * a * l * l);
  return -(r * s * s / (l * l)) * std::exp(-(a + 1.0) * std::log1p(u));
}

double d2_rq(double r, const KernelParams& p) {
  const double s = p.sigma_rq(), l = p.ell_rq(), a = p.alpha_rq();
  const double u = r * r / (2.0 * a * l * l);
  const double t1 = s * s * r * r * (a + 1.0) / (a * l * l * l * l) *
                    std::exp(-(a + 2.0) * std::log1p(u));
  const double t2 = (s / l) * (s / l) * std::exp(-(a + 1.0) * std::log1p(u));
  return t1 - t2;
}

}  // namespace

double kernel_derivative(double r, const KernelParams& p, int order, KernelKind which) {
  if (order != 1 && order != 2) raise(Err::ConfigError, "derivative order must be 1 or 2");
  switch (which) {
    case KernelKind::SquaredExponential:
      return order == 1 ? d1_se(r, p) : d2_se(r, p);
    case KernelKind::RationalQuadratic:
      return order == 1 ? d1_rq(r, p) : d2_rq(r, p);
    case KernelKind::Sum:
      return order == 1 ? d1_se(r, p) + d1_rq(r, p) : d2_se(r, p) + d2_rq(r, p);
  }
  return 0;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (X.row(i) - X.row(j)).norm();
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

Eigen::MatrixXd cross_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd D(A.rows(), B.rows());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < B.rows(); ++j) D(i, j) = (A.row(i) - B.row(j)).norm();
  return D;
}

Eigen::MatrixXd gram_values(const Eigen::MatrixXd& distances, const KernelParams& p,
                            const KernelSelector& sel) {
  Eigen::MatrixXd K(distances.rows(), distances.cols());
  for (int i = 0; i < distances.rows(); ++i)
    for (int j = 0; j < distances.cols(); ++j)
      K(i, j) = kernel_value(distances(i, j), p, sel);
  return K;
}

GramMatrix gram(const Eigen::MatrixXd& inputs, const KernelParams& p,
                const KernelSelector& sel) {
  if (inputs.rows() == 0) raise(Err::ConfigError, "gram needs at least one input");
  GramMatrix g;
  const Eigen::MatrixXd D = pairwise_distances(inputs);
  g.values = gram_values(D, p, sel);
  // Distances are symmetric by construction, so K is too; enforce exactly.
  g.values = ((g.values + g.values.transpose()) / 2.0).eval();

  const int n = static_cast<int>(g.values.rows());
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd A = g.values;
    A.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      g.jitter_applied = jitter;
      return g;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
  }
  raise(Err::NotFactorizable,
        "gram of " + std::to_string(n) + " inputs not factorizable at jitter 1e-4");
}

std::vector<std::string> gram_gradient_names(const KernelSelector& sel) {
  std::vector<std::string> names;
  if (sel.se) {
    names.emplace_back("log_sigma_se");
    names.emplace_back("log_ell_se");
  }
  if (sel.rq) {
    names.emplace_back("log_sigma_rq");
    names.emplace_back("log_ell_rq");
    names.emplace_back("log_alpha_rq");
  }
  if (sel.lp) {
    names.emplace_back("log_period");
    names.emplace_back("log_ell_lp");
    names.emplace_back("log_sigma_lp");
  }
  names.emplace_back("log_sigma_n");
  return names;
}

std::vector<Eigen::MatrixXd> gram_log_gradients(const Eigen::MatrixXd& D,
                                                const KernelParams& p,
                                                const KernelSelector& sel) {
  const int n = static_cast<int>(D.rows());
  std::vector<Eigen::MatrixXd> grads;
  auto fill = [&](auto&& f) {
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = f(D(i, j));
    grads.push_back(std::move(G));
  };

  if (sel.se) {
    fill([&](double r) { return 2.0 * k_se(r, p); });
    const double l = p.ell_se();
    fill([&](double r) { return k_se(r, p) * r * r / (l * l); });
  }
  if (sel.rq) {
    fill([&](double r) { return 2.0 * k_rq(r, p); });
    const double l = p.ell_rq(), a = p.alpha_rq();
    fill([&](double r) {
      const double u = r * r / (2.0 * a * l * l);
      return k_rq(r, p) * 2.0 * a * u / (1.0 + u);
    });
    fill([&](double r) {
      const double u = r * r / (2.0 * a * l * l);
      return k_rq(r, p) * a * (u / (1.0 + u) - std::log1p(u));
    });
  }
  if (sel.lp) {
    const PeriodicParams lp = p.periodic();
    fill([&](double r) {
      return k_local_periodic(r, p) * (2.0 * M_PI * r / (lp.ell_lp * lp.ell_lp * lp.period)) *
             std::sin(2.0 * M_PI * r / lp.period);
    });
    fill([&](double r) {
      const double sp = std::sin(M_PI * r / lp.period);
      return k_local_periodic(r, p) * 4.0 * sp * sp / (lp.ell_lp * lp.ell_lp);
    });
    fill([&](double r) {
      return k_local_periodic(r, p) * r * r / (lp.sigma_lp * lp.sigma_lp);
    });
  }
  const double sn = p.sigma_n();
  grads.push_back(2.0 * sn * sn * Eigen::MatrixXd::Identity(n, n));
  return grads;
}

InsignificanceResult insignificance_fraction(const Eigen::MatrixXd& gram_values,
                                             double threshold) {
  const double lo = gram_values.minCoeff();
  const double hi = gram_values.maxCoeff();
  if (hi == lo) raise(Err::ConstantMatrix, "all gram entries are equal");
  InsignificanceResult r;
  const double cut = lo + threshold * (hi - lo);
  for (int i = 0; i < gram_values.rows(); ++i)
    for (int j = 0; j < gram_values.cols(); ++j)
      if (gram_values(i, j) < cut) ++r.count;
  r.fraction = static_cast<double>(r.count) /
               (static_cast<double>(gram_values.rows()) * gram_values.cols());
  return r;
}

}  // namespace kcast
