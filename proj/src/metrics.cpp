#include "kernelcast/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "kernelcast/errors.hpp"
#include "kernelcast/stats.hpp"

namespace kcast {

DailyMetrics daily_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted) {
  if (truth.size() != predicted.size() || truth.size() < 1)
    raise(Err::LengthMismatch, "daily_metrics needs equal nonempty vectors");
  const int m = static_cast<int>(truth.size());
  DailyMetrics out;
  double se = 0, ae = 0, ape = 0, sape = 0;
  int mape_terms = 0;
  for (int j = 0; j < m; ++j) {
    const double err = truth(j) - predicted(j);
    se += err * err;
    ae += std::abs(err);
    if (std::abs(truth(j)) >= 1e-6) {
      ape += std::abs(err / truth(j));
      ++mape_terms;
    } else {
      ++out.mape_skipped;
    }
    const double denom = std::abs(truth(j)) + std::abs(predicted(j));
    sape += denom > 0 ? 2.0 * std::abs(err) / denom : 0.0;
  }
  out.rmse = std::sqrt(se / m);
  out.mae = ae / m;
  if (mape_terms == 0) raise(Err::AllTermsSkipped, "every |truth| below 1e-6");
  out.mape_plain = ape / mape_terms;
  out.mape_sqrt = std::sqrt(out.mape_plain);
  out.smape_plain = sape / m;
  out.smape_sqrt = std::sqrt(out.smape_plain);
  return out;
}

double error_score(const std::vector<double>& daily_values) {
  if (daily_values.empty()) raise(Err::Empty, "error_score of an empty table");
  double s = 0;
  for (double v : daily_values) s += v;
  return s / static_cast<double>(daily_values.size());
}

double picp(const Eigen::VectorXd& truth, const std::vector<Interval>& intervals) {
  if (static_cast<size_t>(truth.size()) != intervals.size() || intervals.empty())
    raise(Err::LengthMismatch, "picp needs aligned nonempty inputs");
  long inside = 0;
  for (size_t i = 0; i < intervals.size(); ++i)
    if (truth(static_cast<int>(i)) >= intervals[i].lb &&
        truth(static_cast<int>(i)) <= intervals[i].ub)
      ++inside;
  return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

double mpiw(const std::vector<Interval>& intervals) {
  if (intervals.empty()) raise(Err::LengthMismatch, "mpiw of an empty list");
  double s = 0;
  for (const Interval& iv : intervals) {
    if (iv.lb > iv.ub) raise(Err::InvalidInterval, "lb > ub");
    s += iv.ub - iv.lb;
  }
  return s / static_cast<double>(intervals.size());
}

DmResult dm_test(const std::vector<double>& loss_a, const std::vector<double>& loss_b) {
  if (loss_a.size() != loss_b.size()) raise(Err::LengthMismatch, "loss series lengths");
  const int n = static_cast<int>(loss_a.size());
  if (n < 10) raise(Err::LengthMismatch, "dm_test needs n >= 10");

  std::vector<double> d(static_cast<size_t>(n));
  double mean = 0;
  for (int t = 0; t < n; ++t) {
    d[static_cast<size_t>(t)] = loss_a[static_cast<size_t>(t)] - loss_b[static_cast<size_t>(t)];
    mean += d[static_cast<size_t>(t)];
  }
  mean /= n;

  const int lag = static_cast<int>(std::floor(std::cbrt(static_cast<double>(n))));
  auto gamma = [&](int k) {
    double s = 0;
    for (int t = k; t < n; ++t)
      s += (d[static_cast<size_t>(t)] - mean) * (d[static_cast<size_t>(t - k)] - mean);
    return s / n;
  };
  double lrv = gamma(0);
  for (int k = 1; k <= lag; ++k)
    lrv += 2.0 * (1.0 - static_cast<double>(k) / (lag + 1.0)) * gamma(k);
  if (lrv <= 0 || gamma(0) == 0)
    raise(Err::ZeroVariance, "loss differential has no usable variance");

  DmResult r;
  r.lag = lag;
  r.statistic = mean / std::sqrt(lrv / n);
  r.p_value = 2.0 * (1.0 - normal_cdf(std::abs(r.statistic)));
  return r;
}

namespace {

// average ranks with ties; returns the tie correction term sum(t^3 - t)
double rank_row(const Eigen::VectorXd& losses, Eigen::VectorXd& ranks) {
  const int k = static_cast<int>(losses.size());
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return losses(a) < losses(b); });
  double tie_term = 0;
  int i = 0;
  while (i < k) {
    int j = i;
    while (j + 1 < k && losses(idx[static_cast<size_t>(j + 1)]) == losses(idx[static_cast<size_t>(i)]))
      ++j;
    const double avg_rank = (i + j) / 2.0 + 1.0;
    for (int t = i; t <= j; ++t) ranks(idx[static_cast<size_t>(t)]) = avg_rank;
    const double ties = j - i + 1;
    tie_term += ties * ties * ties - ties;
    i = j + 1;
  }
  return tie_term;
}

}  // namespace

FriedmanResult friedman_nemenyi(const Eigen::MatrixXd& losses) {
  const int blocks = static_cast<int>(losses.rows());
  const int k = static_cast<int>(losses.cols());
  if (k < 2 || blocks < 2)
    raise(Err::LengthMismatch, "friedman needs >= 2 models and >= 2 blocks");

  Eigen::VectorXd rank_sum = Eigen::VectorXd::Zero(k);
  double tie_total = 0;
  Eigen::VectorXd ranks(k);
  for (int b = 0; b < blocks; ++b) {
    tie_total += rank_row(losses.row(b), ranks);
    rank_sum += ranks;
  }

  FriedmanResult out;
  out.mean_ranks.resize(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j)
    out.mean_ranks[static_cast<size_t>(j)] = rank_sum(j) / blocks;

  const double nk = static_cast<double>(blocks) * k;
  double chi = 12.0 / (nk * (k + 1.0)) * rank_sum.squaredNorm() - 3.0 * blocks * (k + 1.0);
  const double correction = 1.0 - tie_total / (nk * (static_cast<double>(k) * k - 1.0));
  if (correction > 0) {
    chi /= correction;
  } else {
    chi = 0;  // every block fully tied: no evidence of any difference
  }
  out.statistic = std::max(0.0, chi);
  out.p_value = chi_squared_sf(out.statistic, k - 1);

  out.nemenyi_p = Eigen::MatrixXd::Ones(k, k);
  const double se = std::sqrt(k * (k + 1.0) / (6.0 * blocks));
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double q = std::abs(out.mean_ranks[static_cast<size_t>(a)] -
                                out.mean_ranks[static_cast<size_t>(b)]) / se;
      const double p = 1.0 - studentized_range_cdf(q * std::sqrt(2.0), k);
      out.nemenyi_p(a, b) = p;
      out.nemenyi_p(b, a) = p;
    }
  }
  return out;
}

}  // namespace kcast
