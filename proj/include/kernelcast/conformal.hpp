#ifndef KERNELCAST_CONFORMAL_HPP
#define KERNELCAST_CONFORMAL_HPP

#include <Eigen/Core>
#include <cstdint>

#include "kernelcast/rng.hpp"

namespace kcast {

struct ConformalConfig {
  double nu = 3.0;          // candidate range half-width in training-target SDs
  int num_candidates = 500; // J
  int bootstrap_reps = 30;  // s
  double alpha = 0.05;
  std::uint64_t rng_seed = 0;
  bool split_calibration = false;  // hold out part of the window for scores
  double split_fraction = 0.25;    // used only when split_calibration is on
};

struct Interval {
  double lb = 0;
  double ub = 0;
};

// Non-conformity scores: elementwise |truth - predicted|.
Eigen::VectorXd scores(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted);

// Share of calibration scores at least as large as the candidate's,
// #{a_i >= a*} / (n + 1).
double proportionality(const Eigen::VectorXd& scores, double candidate_score);

// One conformal interval around the point forecast: draws J candidates
// uniformly on [mu - nu sigma, mu + nu sigma], keeps those whose
// proportionality is >= alpha, and returns their min/max. Throws
// Err::EmptyPiSet when no candidate survives.
Interval interval_once(double point_forecast, const Eigen::VectorXd& scores, double mu,
                       double sigma, const ConformalConfig& cfg, RngStream& stream);

struct BootstrapInterval {
  Interval interval;
  bool widened = false;  // nu was doubled once after a majority of reps failed
};

// Averages the endpoints of bootstrap_reps independent redraws (rep k uses
// stream.derive(k)). If a majority of reps yield an empty candidate set the
// whole pass is retried once with nu doubled; a second failure propagates
// Err::EmptyPiSet.
BootstrapInterval interval_bootstrap(double point_forecast, const Eigen::VectorXd& scores,
                                     double mu, double sigma, const ConformalConfig& cfg,
                                     const RngStream& stream);

}  // namespace kcast

#endif
