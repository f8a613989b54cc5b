#include "kernelcast/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "kernelcast/errors.hpp"

namespace kcast {

Eigen::VectorXd scores(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted) {
  if (truth.size() != predicted.size() || truth.size() < 1)
    raise(Err::LengthMismatch, "scores need equal nonempty vectors");
  return (truth - predicted).cwiseAbs();
}

double proportionality(const Eigen::VectorXd& scores, double candidate_score) {
  const int n = static_cast<int>(scores.size());
  long cnt = 0;
  for (int i = 0; i < n; ++i)
    if (scores(i) >= candidate_score) ++cnt;
  return static_cast<double>(cnt) / (n + 1.0);
}

namespace {

// Sorted copy lets each candidate cost O(log n) instead of O(n).
struct SortedScores {
  std::vector<double> v;
  explicit SortedScores(const Eigen::VectorXd& s) : v(s.data(), s.data() + s.size()) {
    std::sort(v.begin(), v.end());
  }
  double gamma(double candidate) const {
    const auto it = std::lower_bound(v.begin(), v.end(), candidate);
    return static_cast<double>(v.end() - it) / (static_cast<double>(v.size()) + 1.0);
  }
};

Interval interval_once_impl(double point, const SortedScores& ss, double mu, double sigma,
                            double nu, const ConformalConfig& cfg, RngStream& stream) {
  const double lo = mu - nu * sigma;
  const double hi = mu + nu * sigma;
  double min_kept = 0, max_kept = 0;
  bool any = false;
  for (int j = 0; j < cfg.num_candidates; ++j) {
    const double cand = stream.uniform(lo, hi);
    if (ss.gamma(std::abs(point - cand)) >= cfg.alpha) {
      if (!any || cand < min_kept) min_kept = cand;
      if (!any || cand > max_kept) max_kept = cand;
      any = true;
    }
  }
  if (!any)
    raise(Err::EmptyPiSet, "no candidate accepted; nu too small or forecast far from "
                           "the training range");
  return Interval{min_kept, max_kept};
}

}  // namespace

Interval interval_once(double point_forecast, const Eigen::VectorXd& sc, double mu,
                       double sigma, const ConformalConfig& cfg, RngStream& stream) {
  if (!(sigma > 0)) raise(Err::ConfigError, "sigma must be positive");
  SortedScores ss(sc);
  return interval_once_impl(point_forecast, ss, mu, sigma, cfg.nu, cfg, stream);
}

BootstrapInterval interval_bootstrap(double point_forecast, const Eigen::VectorXd& sc,
                                     double mu, double sigma, const ConformalConfig& cfg,
                                     const RngStream& stream) {
  if (!(sigma > 0)) raise(Err::ConfigError, "sigma must be positive");
  SortedScores ss(sc);
  const int s = std::max(1, cfg.bootstrap_reps);

  auto run = [&](double nu, BootstrapInterval& out) {
    double lb_sum = 0, ub_sum = 0;
    int ok = 0;
    for (int k = 0; k < s; ++k) {
      RngStream rep = stream.derive(static_cast<std::uint64_t>(k));
      try {
        Interval iv = interval_once_impl(point_forecast, ss, mu, sigma, nu, cfg, rep);
        lb_sum += iv.lb;
        ub_sum += iv.ub;
        ++ok;
      } catch (const Error& e) {
        if (e.code() != Err::EmptyPiSet) throw;
      }
    }
    if (ok * 2 <= s) return false;  // majority failed
    out.interval = Interval{lb_sum / ok, ub_sum / ok};
    return true;
  };

  BootstrapInterval out;
  if (run(cfg.nu, out)) return out;
  out.widened = true;
  if (run(2.0 * cfg.nu, out)) return out;
  raise(Err::EmptyPiSet, "majority of bootstrap reps empty even after widening nu");
}

}  // namespace kcast
